use proptest::prelude::*;

use twophase_gelfand::continuation::{
    classical_lambda_star, find_lambda_star, log_spaced, sweep_nu, CriticalOptions,
};
use twophase_gelfand::grid::{Field, Grid};
use twophase_gelfand::linsolve::principal_eigenpair;
use twophase_gelfand::parabolic::{evolve, EvolveOutcome, EvolveParams};
use twophase_gelfand::reaction::Reaction;
use twophase_gelfand::stationary::{
    k_nu_apply, linearized_principal_eigenvalue, monotone_iterate, nonexistence_bound,
    shooting_solve, MonotoneOptions, ProblemParams, TwoPhaseState,
};

fn minimal(lambda: f64, nu: f64, d: f64, grid: Grid) -> TwoPhaseState {
    let p = ProblemParams::new(lambda, nu, d, Reaction::Exponential).unwrap();
    let r = monotone_iterate(&p, grid, &MonotoneOptions::default()).unwrap();
    assert!(r.converged(), "no minimal solution at lambda={lambda} nu={nu} d={d}");
    r.state
}

fn below_or_equal(a: &Field, b: &Field) -> bool {
    a.values().iter().zip(b.values()).all(|(x, y)| x <= &(y + 1e-12))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn minimal_solutions_grow_with_lambda(l1 in 0.0..0.85f64, dl in 0.0..0.3f64, nu in 0.05..50.0f64) {
        let grid = Grid::new(99).unwrap();
        let a = minimal(l1, nu, 1.0, grid);
        let b = minimal(l1 + dl, nu, 1.0, grid);
        prop_assert!(below_or_equal(&a.u, &b.u) && below_or_equal(&a.v, &b.v));
    }

    #[test]
    fn minimal_u_shrinks_with_nu(lambda in 0.1..0.85f64, nu1 in 0.01..10.0f64, factor in 1.0..20.0f64) {
        let grid = Grid::new(99).unwrap();
        let a = minimal(lambda, nu1, 1.0, grid);
        let b = minimal(lambda, nu1 * factor, 1.0, grid);
        prop_assert!(below_or_equal(&b.u, &a.u));
    }
}

#[test]
fn large_nu_expansion_of_v() {
    let grid = Grid::new(199).unwrap();
    let (lambda, d) = (1.2, 1.0);
    let mut pts = Vec::new();
    for nu in [1e2, 1e3, 1e4] {
        let s = minimal(lambda, nu, d, grid);
        let mut err = 0.0_f64;
        for i in 0..grid.n() {
            if grid.node(i).abs() <= 0.5 {
                let u = s.u.values()[i];
                let predicted = u - lambda * d * u.exp() / ((1.0 + d) * nu);
                err = err.max((s.v.values()[i] - predicted).abs());
            }
        }
        pts.push((nu.ln(), err.ln()));
    }
    let slope = -(pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
    assert!(slope >= 1.8, "observed decay exponent {slope}");
}

#[test]
fn monotone_and_shooting_agree() {
    let n = 399;
    let grid = Grid::new(n).unwrap();
    for (lambda, nu) in [(0.3, 0.01), (0.8, 0.1), (1.0, 1.0), (1.4, 5.0), (1.7, 100.0)] {
        let p = ProblemParams::new(lambda, nu, 1.0, Reaction::Exponential).unwrap();
        let m = monotone_iterate(&p, grid, &MonotoneOptions::default()).unwrap();
        let s = shooting_solve(&p, n, 1e-10).unwrap();
        assert!(m.converged() && s.converged());
        let diff = m.state.max_distance(&s.state);
        assert!(diff < 1e-4, "lambda={lambda} nu={nu}: {diff}");
    }
}

#[test]
fn k_nu_decays_monotonically_in_nu() {
    let grid = Grid::new(199).unwrap();
    let f = Field::from_fn(grid, |x| (1.0 - x * x) * (1.0 + x).exp());
    let norms: Vec<f64> = [10.0, 1e2, 1e3, 1e4]
        .iter()
        .map(|&nu| {
            let p = ProblemParams::new(1.0, nu, 1.0, Reaction::Exponential).unwrap();
            k_nu_apply(&p, &f).unwrap().l2_norm()
        })
        .collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
    assert!(norms[3] < 1e-2 * norms[0], "{norms:?}");
}

#[test]
fn critical_values_between_limits_and_below_bound() {
    let grid = Grid::new(199).unwrap();
    let opts = CriticalOptions::default();
    let (mu1, _) = principal_eigenpair(grid).unwrap();
    for d in [0.5, 1.0, 3.0] {
        let classical = classical_lambda_star(Reaction::Exponential, grid, &opts).unwrap();
        let sweep = sweep_nu(&log_spaced(1e-2, 1e4, 7), d, Reaction::Exponential, grid, &opts, None).unwrap();
        for r in sweep.critical_values() {
            let slack = 2.0 * opts.bracket_tol;
            assert!(r.lambda_star >= classical - slack, "d={d} nu={}: {}", r.nu, r.lambda_star);
            assert!(r.lambda_star <= (1.0 + d) * classical + slack, "d={d} nu={}: {}", r.nu, r.lambda_star);
            let p = ProblemParams::new(1.0, r.nu, d, Reaction::Exponential).unwrap();
            assert!(r.lambda_star <= nonexistence_bound(&p, mu1).unwrap());
        }
    }
}

#[test]
fn critical_value_grid_convergence() {
    let opts = CriticalOptions::default();
    for nu in [0.1, 5.0, 100.0] {
        let a = find_lambda_star(nu, 1.0, Reaction::Exponential, Grid::new(199).unwrap(), &opts).unwrap();
        let b = find_lambda_star(nu, 1.0, Reaction::Exponential, Grid::new(399).unwrap(), &opts).unwrap();
        assert!((a.lambda_star - b.lambda_star).abs() < 5e-3, "nu={nu}");
    }
}

#[test]
fn power_reaction_critical_value() {
    let grid = Grid::new(199).unwrap();
    let opts = CriticalOptions::default();
    let reaction = Reaction::power(2.0).unwrap();
    let classical = classical_lambda_star(reaction, grid, &opts).unwrap();
    let r = find_lambda_star(5.0, 1.0, reaction, grid, &opts).unwrap();
    assert!(r.lambda_star > classical && r.lambda_star < 2.0 * classical);
}

#[test]
fn linearized_eigenvalue_drops_towards_critical() {
    let grid = Grid::new(199).unwrap();
    let star = find_lambda_star(5.0, 1.0, Reaction::Exponential, grid, &CriticalOptions::default()).unwrap();
    let mut prev = f64::INFINITY;
    for frac in [0.0, 0.5, 0.8, 0.95, 0.99] {
        let lambda = frac * star.lower;
        let p = ProblemParams::new(lambda, 5.0, 1.0, Reaction::Exponential).unwrap();
        let s = minimal(lambda, 5.0, 1.0, grid);
        let mu = linearized_principal_eigenvalue(&p, &s).unwrap();
        assert!(mu >= -1e-8 && mu < prev, "frac={frac}: {mu} (previous {prev})");
        prev = mu;
    }
    assert!(prev < 0.5);
}

fn run(lambda: f64, dt0: f64, grid: Grid) -> twophase_gelfand::parabolic::EvolveReport {
    let p = ProblemParams::new(lambda, 5.0, 1.0, Reaction::Exponential).unwrap();
    let mut params = EvolveParams::new(p, 1.0);
    params.dt0 = dt0;
    evolve(&params, grid).unwrap()
}

#[test]
fn trajectory_stays_below_stationary_solution() {
    let grid = Grid::new(199).unwrap();
    for lambda in [0.6, 1.2, 1.4] {
        let stat = minimal(lambda, 5.0, 1.0, grid);
        let r = run(lambda, 1e-3, grid);
        let cap = stat.u.max() + 1e-6;
        assert!(r.trace.iter().all(|s| s.max_u <= cap), "lambda={lambda}");
    }
}

#[test]
fn dichotomy_around_critical_value() {
    let grid = Grid::new(199).unwrap();
    let star = find_lambda_star(5.0, 1.0, Reaction::Exponential, grid, &CriticalOptions::default()).unwrap();
    for offset in [0.05, 0.02] {
        let below = run(star.lambda_star - offset, 1e-3, grid);
        let above = run(star.lambda_star + offset, 1e-3, grid);
        assert_eq!(below.outcome, EvolveOutcome::SteadyState, "lambda*-{offset}");
        assert_eq!(above.outcome, EvolveOutcome::BlowUp, "lambda*+{offset}");
    }
}

#[test]
fn refining_dt_is_consistent() {
    let grid = Grid::new(199).unwrap();
    let coarse = run(1.2, 1e-3, grid);
    let fine = run(1.2, 5e-4, grid);
    assert_eq!(coarse.outcome, EvolveOutcome::SteadyState);
    assert_eq!(fine.outcome, EvolveOutcome::SteadyState);
    assert!(coarse.state.max_distance(&fine.state) < 1e-6);

    let coarse = run(1.5, 1e-3, grid);
    let fine = run(1.5, 5e-4, grid);
    assert_eq!(coarse.outcome, EvolveOutcome::BlowUp);
    assert_eq!(fine.outcome, EvolveOutcome::BlowUp);
    assert!((coarse.t_final - fine.t_final).abs() < 0.02 * fine.t_final);
}
