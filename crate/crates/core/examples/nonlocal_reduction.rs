//! Eliminating v at λ = 0.8: K_ν acting on the principal eigenfunction, the
//! residual of the reduced single equation, and the nonexistence bound λ**.

use twophase_gelfand::continuation::{find_lambda_star, CriticalOptions};
use twophase_gelfand::grid::Grid;
use twophase_gelfand::linsolve::principal_eigenpair;
use twophase_gelfand::reaction::Reaction;
use twophase_gelfand::stationary::{
    k_nu_apply, linearized_principal_eigenvalue, monotone_iterate, nonexistence_bound, nonlocal_residual,
    MonotoneOptions, ProblemParams,
};

fn main() -> twophase_gelfand::Result<()> {
    let grid = Grid::new(199)?;
    let (mu1, phi) = principal_eigenpair(grid)?;
    println!("mu1 = {mu1:.8} (pi^2/4 = {:.8})", std::f64::consts::PI.powi(2) / 4.0);

    for nu in [0.1, 1.0, 10.0, 100.0] {
        let p = ProblemParams::new(0.8, nu, 1.0, Reaction::Exponential)?;
        let g = p.gamma();
        let k = k_nu_apply(&p, &phi)?;
        let ratio = k.values()[grid.n() / 2] / phi.values()[grid.n() / 2];
        let s = monotone_iterate(&p, grid, &MonotoneOptions::default())?;
        let (res_u, res_v) = nonlocal_residual(&p, &s.state)?;
        let bound = nonexistence_bound(&p, mu1)?;
        let star = find_lambda_star(nu, 1.0, Reaction::Exponential, grid, &CriticalOptions::default())?;
        println!(
            "nu={nu:>6}: K phi1 / phi1 = {ratio:.6} (formula {:.6}), reduced residuals {res_u:.1e}/{res_v:.1e}, \
             mu_lin = {:.4}, lambda* = {:.4} <= lambda** = {bound:.4}",
            p.d * g * mu1 / (g * mu1 + nu),
            linearized_principal_eigenvalue(&p, &s.state)?,
            star.lambda_star
        );
    }
    Ok(())
}
