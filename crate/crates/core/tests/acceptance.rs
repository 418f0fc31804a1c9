//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL ...`
//! line; run with `cargo test --test acceptance -- --nocapture` to see them.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};

use twophase_gelfand::grid::{neg_laplacian_apply, Field, Grid};
use twophase_gelfand::io::parse_state_csv;
use twophase_gelfand::linsolve::{block_solve, principal_eigenpair, BlockOp};
use twophase_gelfand::parabolic::{evolve, monotonicity_check, EvolveOutcome, EvolveParams};
use twophase_gelfand::reaction::Reaction;
use twophase_gelfand::stationary::{
    k_nu_apply, linearized_principal_eigenvalue, monotone_iterate, nonexistence_bound,
    nonlocal_residual, shooting_solve, MonotoneOptions, ProblemParams,
};
use twophase_gelfand::continuation::{find_lambda_star, CriticalOptions};

const BIN: &str = env!("CARGO_BIN_EXE_twophase");

struct Run {
    code: i32,
    summary: HashMap<String, String>,
    elapsed: Duration,
}

impl Run {
    fn num(&self, key: &str) -> f64 {
        self.summary
            .get(key)
            .unwrap_or_else(|| panic!("summary has no '{key}': {:?}", self.summary))
            .parse()
            .unwrap()
    }
}

fn cli(args: &[&str]) -> Run {
    let started = Instant::now();
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    let elapsed = started.elapsed();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let summary = stdout
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    Run {
        code: out.status.code().unwrap_or(-1),
        summary,
        elapsed,
    }
}

fn report(id: u32, ok: bool, detail: String) {
    println!("criterion {id}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} failed: {detail}");
}

fn classical_n399() -> Run {
    cli(&["classical", "--g", "exp", "--n", "399"])
}

#[test]
fn criterion_1_classical_critical_value() {
    let r = classical_n399();
    let l = r.num("lambda_star");
    let ok = r.code == 0 && (l - 0.878).abs() <= 0.01 && r.elapsed < Duration::from_secs(30);
    report(1, ok, format!("Lambda*={l:.6} (0.878 +/- 0.01) in {:.2?}", r.elapsed));
}

#[test]
fn criterion_2_critical_value_at_nu_5() {
    let r = cli(&["lambda-star", "--nu", "5", "--d", "1"]);
    let l = r.num("lambda_star");
    let ok = r.code == 0 && (l - 1.468).abs() <= 0.015 && r.elapsed < Duration::from_secs(120);
    report(2, ok, format!("lambda*(5)={l:.6} (1.468 +/- 0.015) in {:.2?}", r.elapsed));
}

#[test]
fn criterion_3_large_nu_limit() {
    let r = cli(&["lambda-star", "--nu", "1e4", "--d", "1"]);
    let l = r.num("lambda_star");
    let classical = cli(&["classical", "--g", "exp"]).num("lambda_star");
    let rel = (l - 2.0 * classical).abs() / (2.0 * classical);
    let rel_quoted = (l - 1.757).abs() / 1.757;
    let ok = r.code == 0 && rel <= 0.015 && rel_quoted <= 0.015 && r.elapsed < Duration::from_secs(180);
    report(
        3,
        ok,
        format!(
            "lambda*(1e4)={l:.6}, 2 Lambda*={:.6}, rel {rel:.2e} (vs 1.757: {rel_quoted:.2e}; limit 1.5e-2) in {:.2?}",
            2.0 * classical,
            r.elapsed
        ),
    );
}

#[test]
fn criterion_4_small_nu_limit() {
    let r = cli(&["lambda-star", "--nu", "1e-3", "--d", "1"]);
    let l = r.num("lambda_star");
    let classical = classical_n399().num("lambda_star");
    let rel = (l - classical).abs() / classical;
    let ok = r.code == 0 && rel <= 0.01;
    report(4, ok, format!("lambda*(1e-3)={l:.6}, Lambda*={classical:.6}, rel {rel:.2e} (limit 1e-2)"));
}

fn read_sweep(path: &Path) -> Vec<(f64, f64, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (c[0], c[1], c[2])
        })
        .collect()
}

#[test]
fn criterion_5_critical_curve() {
    let dir = tempfile::tempdir().unwrap();
    let serial_path = dir.path().join("serial.csv");
    let pool_path = dir.path().join("pool.csv");
    let base = ["sweep", "--nu-min", "1e-2", "--nu-max", "1e3", "--nu-count", "24", "--d", "1"];
    let run_with = |jobs: &str, path: &Path| {
        let mut args = base.to_vec();
        let p = path.to_str().unwrap();
        args.extend(["--jobs", jobs, "--output", p]);
        cli(&args)
    };
    let serial = run_with("1", &serial_path);
    let pool = run_with("4", &pool_path);
    let rows = read_sweep(&serial_path);
    let identical = std::fs::read(&serial_path).unwrap() == std::fs::read(&pool_path).unwrap();

    let values: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let violations = rows
        .windows(2)
        .filter(|w| w[1].1 < w[0].1 - w[0].2.max(w[1].2))
        .count();
    let (lo, hi) = (0.88 * 0.99, 1.76 * 1.01);
    let inside = values.iter().all(|&l| l.is_finite() && (lo..=hi).contains(&l));
    let first = values[0];
    let last = *values.last().unwrap();
    let ends = (first - 0.88).abs() <= 0.01 * 0.88 && (last - 1.76).abs() <= 0.01 * 1.76;
    let ok = serial.code == 0
        && pool.code == 0
        && rows.len() == 24
        && identical
        && violations == 0
        && inside
        && ends
        && serial.elapsed < Duration::from_secs(30 * 60)
        && pool.elapsed < Duration::from_secs(8 * 60);
    report(
        5,
        ok,
        format!(
            "24 points, lambda* from {first:.5} to {last:.5} within [{lo:.4}, {hi:.4}], {violations} monotonicity violations, \
             serial {:.2?}, 4 workers {:.2?}, outputs identical: {identical}",
            serial.elapsed, pool.elapsed
        ),
    );
}

#[test]
fn criterion_6_stationary_ordering_and_shooting() {
    let n = 799;
    let grid = Grid::new(n).unwrap();
    let opts = MonotoneOptions::default();
    let mut states = Vec::new();
    let mut worst_cross = 0.0_f64;
    let mut ordered = true;
    for nu in [1.0, 5.0] {
        let p = ProblemParams::new(1.0, nu, 1.0, Reaction::Exponential).unwrap();
        let m = monotone_iterate(&p, grid, &opts).unwrap();
        let s = shooting_solve(&p, n, 1e-10).unwrap();
        assert!(m.converged() && s.converged());
        worst_cross = worst_cross.max(m.state.max_distance(&s.state));
        let (u, v) = (m.state.u.values(), m.state.v.values());
        ordered &= u.iter().zip(v).all(|(&a, &b)| a >= b && b >= 0.0);
        states.push(m.state);
    }
    let nested = states[0]
        .u
        .values()
        .iter()
        .zip(states[1].u.values())
        .all(|(a, b)| a >= b);
    let ok = ordered && nested && worst_cross < 1e-4;
    report(
        6,
        ok,
        format!("u >= v >= 0: {ordered}, u(nu=1) >= u(nu=5): {nested}, monotone vs shooting sup {worst_cross:.2e} (limit 1e-4)"),
    );
}

#[test]
fn criterion_7_blowup_dichotomy() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("final.csv");
    let stat = dir.path().join("stationary.csv");
    fn with<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
        let mut a = head.to_vec();
        a.extend(["--nu", "5", "--d", "1", "--alpha", "1", "--g", "exp"]);
        a.extend(tail);
        a
    }
    let below = cli(&with(&["evolve", "--lambda", "1.2"], &["--snapshot", snap.to_str().unwrap()]));
    let above = cli(&with(&["evolve", "--lambda", "1.5"], &[]));
    let st = cli(&with(&["stationary", "--lambda", "1.2"], &["--output", stat.to_str().unwrap()]));
    let (evolved, _) = parse_state_csv(&std::fs::read_to_string(&snap).unwrap()).unwrap();
    let (minimal, _) = parse_state_csv(&std::fs::read_to_string(&stat).unwrap()).unwrap();
    let l1 = evolved.l1_distance(&minimal).unwrap();
    let ok = below.code == 0
        && below.summary["outcome"] == "steady"
        && l1 < 1e-5
        && above.code == 3
        && above.summary["outcome"] == "blowup"
        && st.code == 0
        && below.elapsed < Duration::from_secs(60)
        && above.elapsed < Duration::from_secs(60);
    report(
        7,
        ok,
        format!(
            "lambda=1.2: {} (L1 to minimal {l1:.2e}, limit 1e-5) in {:.2?}; lambda=1.5: {} at t={} in {:.2?}",
            below.summary["outcome"], below.elapsed, above.summary["outcome"], above.summary["t_final"], above.elapsed
        ),
    );
}

#[test]
fn criterion_8_property_suites() {
    let started = Instant::now();
    let grid = Grid::new(199).unwrap();
    let opts = MonotoneOptions::default();
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    // Monotone iterates, nonlocal residual and linearized stability at
    // minimal solutions.
    let mut worst_defect = 0.0_f64;
    let mut worst_nonlocal = 0.0_f64;
    let mut worst_mu = f64::INFINITY;
    for &(lambda, nu, d) in &[(0.5, 0.1, 1.0), (0.85, 1.0, 1.0), (1.0, 5.0, 1.0), (1.4, 5.0, 1.0), (1.5, 100.0, 1.0), (2.0, 10.0, 3.0)] {
        let p = ProblemParams::new(lambda, nu, d, Reaction::Exponential).unwrap();
        let r = monotone_iterate(&p, grid, &opts).unwrap();
        check("minimal solution converges", r.converged());
        worst_defect = worst_defect.max(r.monotonicity_defect);
        let (a, b) = nonlocal_residual(&p, &r.state).unwrap();
        worst_nonlocal = worst_nonlocal.max(a).max(b);
        worst_mu = worst_mu.min(linearized_principal_eigenvalue(&p, &r.state).unwrap());
    }
    check("iterate ordering", worst_defect <= 1e-12);
    check("nonlocal residual", worst_nonlocal < 1e-7);
    check("linearized eigenvalue", worst_mu >= -1e-8);

    // Time monotonicity and energy decay.
    let p = ProblemParams::new(1.2, 5.0, 1.0, Reaction::Exponential).unwrap();
    let mut params = EvolveParams::new(p, 1.0);
    params.store_snapshots = true;
    let ev = evolve(&params, grid).unwrap();
    check("steady trajectory", ev.outcome == EvolveOutcome::SteadyState);
    check("time monotonicity", monotonicity_check(&ev));
    let energy_ok = ev
        .trace
        .windows(2)
        .all(|w| w[1].energy <= w[0].energy + 1e-8 * w[0].energy.abs().max(1.0));
    check("energy decay", energy_ok);

    // K_ν on the discrete eigenfunctions and on superharmonic data.
    let h = grid.h();
    let mut worst_eigen = 0.0_f64;
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let mut min_k = f64::INFINITY;
    for &nu in &[0.1, 1.0, 10.0, 1e3] {
        for &d in &[0.5, 1.0, 3.0] {
            let p = ProblemParams::new(1.0, nu, d, Reaction::Exponential).unwrap();
            let gamma = p.gamma();
            for k in 1..=5 {
                let kk = k as f64;
                let mu = 4.0 / (h * h) * (kk * std::f64::consts::PI * h / 4.0).sin().powi(2);
                let e = Field::from_fn(grid, |x| (kk * std::f64::consts::PI * (x + 1.0) / 2.0).sin());
                let ke = k_nu_apply(&p, &e).unwrap();
                let factor = d * gamma * mu / (gamma * mu + nu);
                let err = ke.axpy(-factor, &e).unwrap().max_norm() / (factor * e.max_norm());
                worst_eigen = worst_eigen.max(err);
            }
            for _ in 0..5 {
                let r = Field::from_fn(grid, |_| rng.gen_range(0.0..1.0));
                let f = twophase_gelfand::linsolve::HelmholtzOp::new(grid, 1.0, 0.0)
                    .unwrap()
                    .solve(&r)
                    .unwrap();
                assert!(neg_laplacian_apply(&f).values().iter().all(|&x| x >= -1e-9));
                min_k = min_k.min(k_nu_apply(&p, &f).unwrap().values().iter().copied().fold(f64::INFINITY, f64::min));
            }
        }
    }
    check("K_nu eigen formula", worst_eigen < 1e-8);
    check("K_nu positivity", min_k >= -1e-12);

    // Nonexistence bound against measured critical values.
    let (mu1, _) = principal_eigenpair(grid).unwrap();
    let copts = CriticalOptions::default();
    let mut bound_ok = true;
    for &nu in &[1e-2, 0.1, 1.0, 5.0, 100.0, 1e4] {
        let star = find_lambda_star(nu, 1.0, Reaction::Exponential, grid, &copts).unwrap();
        let p = ProblemParams::new(1.0, nu, 1.0, Reaction::Exponential).unwrap();
        bound_ok &= nonexistence_bound(&p, mu1).unwrap() >= star.upper;
    }
    check("nonexistence bound", bound_ok);

    let elapsed = started.elapsed();
    check("runtime", elapsed < Duration::from_secs(300));
    report(
        8,
        failures.is_empty(),
        format!(
            "defect {worst_defect:.1e}, nonlocal {worst_nonlocal:.1e}, min mu_lin {worst_mu:.4}, K_nu eigen rel err {worst_eigen:.1e}, \
             min K f {min_k:.2e}, bound holds: {bound_ok}, in {elapsed:.2?}; failing: {failures:?}"
        ),
    );
}

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

#[test]
fn criterion_9_oracle_equivalence() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    for &n in &[5, 20, 50] {
        let grid = Grid::new(n).unwrap();
        let h2 = grid.h() * grid.h();
        for &(nu, d) in &[(0.01, 1.0), (1.0, 0.3), (5.0, 1.0), (100.0, 3.0)] {
            let mut a = vec![vec![0.0; 2 * n]; 2 * n];
            for i in 0..n {
                a[i][i] = 2.0 / h2 + nu;
                a[n + i][n + i] = 2.0 * d / h2 + nu;
                a[i][n + i] = -nu;
                a[n + i][i] = -nu;
                if i + 1 < n {
                    a[i][i + 1] = -1.0 / h2;
                    a[i + 1][i] = -1.0 / h2;
                    a[n + i][n + i + 1] = -d / h2;
                    a[n + i + 1][n + i] = -d / h2;
                }
            }
            let f = Field::from_fn(grid, |_| rng.gen_range(-1.0..1.0));
            let g = Field::from_fn(grid, |_| rng.gen_range(-1.0..1.0));
            let (phi, psi) = block_solve(&BlockOp::new(grid, nu, d).unwrap(), &f, &g).unwrap();
            let dense = dense_solve(a, f.values().iter().chain(g.values()).copied().collect());
            let scale = dense.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let err = phi
                .values()
                .iter()
                .chain(psi.values())
                .zip(&dense)
                .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
            worst = worst.max(err / scale);
        }
    }

    let quarter = std::f64::consts::PI.powi(2) / 4.0;
    let errs: Vec<(f64, f64)> = [49, 99, 199, 399]
        .iter()
        .map(|&n| {
            let grid = Grid::new(n).unwrap();
            let (mu, _) = principal_eigenpair(grid).unwrap();
            (grid.h().ln(), (quarter - mu).abs().ln())
        })
        .collect();
    let mean = |f: &dyn Fn(&(f64, f64)) -> f64| errs.iter().map(f).sum::<f64>() / errs.len() as f64;
    let (mx, my) = (mean(&|p| p.0), mean(&|p| p.1));
    let order = errs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / errs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let ok = worst < 1e-8 && (order - 2.0).abs() <= 0.2;
    report(
        9,
        ok,
        format!("Schur vs dense rel err {worst:.1e} (limit 1e-8), mu1 convergence order {order:.3} (2.0 +/- 0.2)"),
    );
}
