//! Minimal stationary solutions at λ = 1, d = 1 for ν = 1 and ν = 5,
//! printed as a coarse table of u and v.

use twophase_gelfand::grid::Grid;
use twophase_gelfand::reaction::Reaction;
use twophase_gelfand::stationary::{monotone_iterate, MonotoneOptions, ProblemParams};

fn main() -> twophase_gelfand::Result<()> {
    let grid = Grid::new(199)?;
    let opts = MonotoneOptions::default();
    let mut profiles = Vec::new();
    for nu in [1.0, 5.0] {
        let p = ProblemParams::new(1.0, nu, 1.0, Reaction::Exponential)?;
        let r = monotone_iterate(&p, grid, &opts)?;
        println!(
            "nu={nu}: status={:?} iterations={} residual={:.2e} u(0)={:.6} v(0)={:.6}",
            r.status,
            r.iterations,
            r.residual.unwrap_or(f64::NAN),
            r.state.u.max(),
            r.state.v.max()
        );
        profiles.push(r.state);
    }
    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "x", "u(nu=1)", "v(nu=1)", "u(nu=5)", "v(nu=5)");
    for i in (0..grid.n()).step_by(20) {
        println!(
            "{:>8.3} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            grid.node(i),
            profiles[0].u.values()[i],
            profiles[0].v.values()[i],
            profiles[1].u.values()[i],
            profiles[1].v.values()[i]
        );
    }
    Ok(())
}
