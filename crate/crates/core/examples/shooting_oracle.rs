//! Cross-check of the monotone iteration against the shooting method.

use twophase_gelfand::grid::Grid;
use twophase_gelfand::reaction::Reaction;
use twophase_gelfand::stationary::{monotone_iterate, shooting_solve, MonotoneOptions, ProblemParams};

fn main() -> twophase_gelfand::Result<()> {
    let n = 799;
    let grid = Grid::new(n)?;
    for (lambda, nu) in [(0.5, 1.0), (1.0, 1.0), (1.0, 5.0), (1.4, 5.0)] {
        let p = ProblemParams::new(lambda, nu, 1.0, Reaction::Exponential)?;
        let m = monotone_iterate(&p, grid, &MonotoneOptions::default())?;
        let s = shooting_solve(&p, n, 1e-10)?;
        println!(
            "lambda={lambda} nu={nu}: monotone {:?}, shooting {:?}, sup difference {:.2e}",
            m.status,
            s.status,
            m.state.max_distance(&s.state)
        );
    }
    Ok(())
}
