//! Parabolic evolution from zero data below and above λ*(5) ≈ 1.468.

use twophase_gelfand::grid::Grid;
use twophase_gelfand::parabolic::{compare_with_stationary, evolve, monotonicity_check, EvolveParams};
use twophase_gelfand::reaction::Reaction;
use twophase_gelfand::stationary::{monotone_iterate, MonotoneOptions, ProblemParams};

fn main() -> twophase_gelfand::Result<()> {
    let grid = Grid::new(199)?;
    for lambda in [1.2, 1.5] {
        let p = ProblemParams::new(lambda, 5.0, 1.0, Reaction::Exponential)?;
        let r = evolve(&EvolveParams::new(p, 1.0), grid)?;
        println!(
            "lambda={lambda}: {:?} at t={:.4} after {} steps, max U={:.4}, monotone in time: {}",
            r.outcome,
            r.t_final,
            r.steps,
            r.state.u.max(),
            monotonicity_check(&r)
        );
        let stationary = monotone_iterate(&p, grid, &MonotoneOptions::default())?;
        if stationary.converged() {
            println!("  L1 distance to minimal solution: {:.3e}", compare_with_stationary(&r, &stationary)?);
        } else {
            println!("  no stationary solution: {:?}", stationary.status);
        }
    }
    Ok(())
}
