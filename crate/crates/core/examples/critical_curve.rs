//! λ*(ν) on a log-spaced ν grid, against the limits Λ* and (1 + d)Λ*.

use std::time::Instant;

use twophase_gelfand::continuation::{classical_lambda_star, log_spaced, sweep_nu, CriticalOptions};
use twophase_gelfand::grid::Grid;
use twophase_gelfand::reaction::Reaction;

fn main() -> twophase_gelfand::Result<()> {
    let grid = Grid::new(199)?;
    let opts = CriticalOptions::default();
    let d = 1.0;
    let classical = classical_lambda_star(Reaction::Exponential, grid, &opts)?;
    println!("Lambda* = {classical:.5}, (1+d) Lambda* = {:.5}", (1.0 + d) * classical);

    let started = Instant::now();
    let sweep = sweep_nu(&log_spaced(1e-2, 1e3, 12), d, Reaction::Exponential, grid, &opts, None)?;
    for e in &sweep.entries {
        match &e.result {
            Ok(r) => println!("nu={:>10.4e}  lambda*={:.5}  (+/- {:.1e})", r.nu, r.lambda_star, r.bracket_width),
            Err(err) => println!("nu={:>10.4e}  failed: {err}", e.nu),
        }
    }
    println!("sweep took {:.2} s", started.elapsed().as_secs_f64());
    Ok(())
}
