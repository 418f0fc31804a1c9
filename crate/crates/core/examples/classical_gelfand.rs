//! Critical values Λ* of the scalar problem -w'' = Λ g(w) on (-1, 1).

use twophase_gelfand::continuation::{classical_lambda_star, CriticalOptions};
use twophase_gelfand::grid::Grid;
use twophase_gelfand::reaction::Reaction;

fn main() -> twophase_gelfand::Result<()> {
    let opts = CriticalOptions::default();
    for n in [99, 199, 399] {
        let l = classical_lambda_star(Reaction::Exponential, Grid::new(n)?, &opts)?;
        println!("exp    n={n:>3}: Lambda* = {l:.6}");
    }
    let grid = Grid::new(199)?;
    for p in [1.5, 2.0, 3.0] {
        let r = Reaction::power(p)?;
        println!("{r:<6} n=199: Lambda* = {:.6}", classical_lambda_star(r, grid, &opts)?);
    }
    Ok(())
}
