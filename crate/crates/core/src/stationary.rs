//! Minimal stationary solutions of the two-phase system
//!
//! ```text
//! -Δu   = λ g(u) + ν (v - u)
//! -d Δv = ν (u - v)
//! ```
//!
//! on the slab with zero Dirichlet data. The primary route is the monotone
//! iteration from `(0, 0)`, which increases to the minimal solution when one
//! exists and diverges otherwise. [`shooting_solve`] is an independent ODE
//! route used as an oracle. The module also carries the nonlocal reduction
//! through `K_ν`, the linearized principal eigenvalue and the a priori
//! nonexistence bound.

use crate::error::{Error, Result};
use crate::grid::{max_diff, neg_laplacian_apply, neg_laplacian_into, Field, Grid};
use crate::linsolve::{positive_inverse_iteration, BlockFactor, BlockOp, HelmholtzOp};
use crate::reaction::Reaction;

/// Parameters of the stationary problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub lambda: f64,
    pub nu: f64,
    pub d: f64,
    pub reaction: Reaction,
}

impl ProblemParams {
    pub fn new(lambda: f64, nu: f64, d: f64, reaction: Reaction) -> Result<Self> {
        let p = Self {
            lambda,
            nu,
            d,
            reaction,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "nu must be finite and > 0, got {}",
                self.nu
            )));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "d must be finite and > 0, got {}",
                self.d
            )));
        }
        Ok(())
    }

    /// `γ = d / (1 + d)`.
    pub fn gamma(&self) -> f64 {
        self.d / (1.0 + self.d)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }
}

/// Pair of grid functions `(u, v)` on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhaseState {
    pub u: Field,
    pub v: Field,
}

impl TwoPhaseState {
    pub fn new(u: Field, v: Field) -> Result<Self> {
        u.grid().check(&v.grid())?;
        Ok(Self { u, v })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            u: Field::zeros(grid),
            v: Field::zeros(grid),
        }
    }

    pub fn grid(&self) -> Grid {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// Max-norm distance over both components.
    pub fn max_distance(&self, other: &TwoPhaseState) -> f64 {
        max_diff(self.u.values(), other.u.values()).max(max_diff(self.v.values(), other.v.values()))
    }

    /// h-weighted L1 distance, components summed.
    pub fn l1_distance(&self, other: &TwoPhaseState) -> Result<f64> {
        Ok(self.u.axpy(-1.0, &other.u)?.l1_norm() + self.v.axpy(-1.0, &other.v)?.l1_norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryStatus {
    Converged,
    Diverged,
    IterationCapReached,
}

#[derive(Debug, Clone)]
pub struct StationaryReport {
    pub status: StationaryStatus,
    /// Last iterate; the minimal solution iff `status` is `Converged`.
    pub state: TwoPhaseState,
    pub iterations: usize,
    /// Sup norm of the last iterate difference (or the Newton residual for
    /// the shooting route).
    pub final_increment: f64,
    /// Whether the last increment was smaller than the one before it.
    pub increments_shrinking: bool,
    /// Max-norm residual of the discrete nonlinear system, computed on
    /// convergence.
    pub residual: Option<f64>,
    /// Largest decrease of any iterate component between consecutive sweeps;
    /// zero when the iteration is monotone.
    pub monotonicity_defect: f64,
}

impl StationaryReport {
    pub fn converged(&self) -> bool {
        self.status == StationaryStatus::Converged
    }
}

/// Controls for [`monotone_iterate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub divergence_cap: f64,
    /// Consecutive growing increments that classify a run as diverged.
    pub growth_window: usize,
}

impl Default for MonotoneOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            divergence_cap: 1e6,
            growth_window: 50,
        }
    }
}

impl MonotoneOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.divergence_cap > 0.0) {
            return Err(Error::InvalidArgument(
                "monotone iteration needs tol > 0, max_iter >= 1, divergence_cap > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Monotone iteration from `(0, 0)`:
/// `(φ_k, ψ_k) = B^{-1}(λ g(φ_{k-1}), 0)` with `B` the cooperative block
/// operator.
pub fn monotone_iterate(
    p: &ProblemParams,
    grid: Grid,
    opts: &MonotoneOptions,
) -> Result<StationaryReport> {
    monotone_iterate_from(p, grid, opts, None)
}

/// [`monotone_iterate`] started from `seed`, which must be a subsolution
/// (for instance the minimal solution at a smaller `λ`).
pub fn monotone_iterate_from(
    p: &ProblemParams,
    grid: Grid,
    opts: &MonotoneOptions,
    seed: Option<&TwoPhaseState>,
) -> Result<StationaryReport> {
    p.validate()?;
    opts.validate()?;
    let mut factor = BlockOp::new(grid, p.nu, p.d)?.factorize()?;
    let n = grid.n();
    let (mut phi, mut psi) = match seed {
        Some(s) => {
            grid.check(&s.grid())?;
            (s.u.values().to_vec(), s.v.values().to_vec())
        }
        None => (vec![0.0; n], vec![0.0; n]),
    };
    let mut next_phi = vec![0.0; n];
    let mut next_psi = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let zeros = vec![0.0; n];

    let mut status = StationaryStatus::IterationCapReached;
    let mut increment = f64::INFINITY;
    let mut prev_increment = f64::INFINITY;
    let mut growing = 0usize;
    let mut defect = 0.0_f64;
    let mut iterations = 0;

    for k in 1..=opts.max_iter {
        iterations = k;
        p.reaction.g_into(&phi, &mut rhs)?;
        rhs.iter_mut().for_each(|r| *r *= p.lambda);
        factor.solve_into(&rhs, &zeros, &mut next_phi, &mut next_psi);

        if !next_phi.iter().chain(&next_psi).all(|x| x.is_finite()) {
            status = StationaryStatus::Diverged;
            break;
        }
        let mut inc = 0.0_f64;
        for i in 0..n {
            let du = next_phi[i] - phi[i];
            let dv = next_psi[i] - psi[i];
            inc = inc.max(du.abs());
            defect = defect.max(-du).max(-dv);
        }
        std::mem::swap(&mut phi, &mut next_phi);
        std::mem::swap(&mut psi, &mut next_psi);
        prev_increment = increment;
        increment = inc;

        if increment < opts.tol {
            status = StationaryStatus::Converged;
            break;
        }
        if crate::grid::max_norm(&phi) > opts.divergence_cap {
            status = StationaryStatus::Diverged;
            break;
        }
        if increment > prev_increment {
            growing += 1;
            if growing >= opts.growth_window {
                status = StationaryStatus::Diverged;
                break;
            }
        } else {
            growing = 0;
        }
    }

    let state = TwoPhaseState {
        u: Field::from_values(grid, phi)?,
        v: Field::from_values(grid, psi)?,
    };
    let residual = if status == StationaryStatus::Converged {
        Some(stationary_residual(p, &state)?)
    } else {
        None
    };
    Ok(StationaryReport {
        status,
        state,
        iterations,
        final_increment: increment,
        increments_shrinking: increment < prev_increment,
        residual,
        monotonicity_defect: defect,
    })
}

/// Max-norm residual of the discrete stationary system at `s`.
pub fn stationary_residual(p: &ProblemParams, s: &TwoPhaseState) -> Result<f64> {
    let lu = neg_laplacian_apply(&s.u);
    let lv = neg_laplacian_apply(&s.v);
    let mut res = 0.0_f64;
    for i in 0..s.u.len() {
        let (u, v) = (s.u.values()[i], s.v.values()[i]);
        let r1 = lu.values()[i] - p.lambda * p.reaction.g(u)? - p.nu * (v - u);
        let r2 = p.d * lv.values()[i] - p.nu * (u - v);
        res = res.max(r1.abs()).max(r2.abs());
    }
    Ok(res)
}

/// Residual of the fixed-point form `(u, v) = B^{-1}(λ g(u), 0)`.
///
/// Unlike [`stationary_residual`], this does not amplify perturbations of the
/// state by `1/h²`, so it is the right gate for states that went through a
/// rounded text format.
pub fn fixed_point_residual(p: &ProblemParams, s: &TwoPhaseState) -> Result<f64> {
    let grid = s.grid();
    let mut factor = BlockOp::new(grid, p.nu, p.d)?.factorize()?;
    let mut rhs = vec![0.0; grid.n()];
    p.reaction.g_into(s.u.values(), &mut rhs)?;
    rhs.iter_mut().for_each(|r| *r *= p.lambda);
    let rhs = Field::from_values(grid, rhs)?;
    let (u, v) = factor.solve(&rhs, &Field::zeros(grid))?;
    Ok(s.max_distance(&TwoPhaseState { u, v }))
}

const RK4_STEP: f64 = 1e-4;
const NEWTON_MAX_STEPS: usize = 100;
const BACKTRACK_STEPS: usize = 30;

/// One integrated trajectory of the shooting ODE on `[0, 1]`.
struct Trajectory {
    // (u, u', v, v') at x = k * RK4_STEP
    states: Vec<[f64; 4]>,
}

impl Trajectory {
    fn end(&self) -> [f64; 4] {
        *self.states.last().expect("nonempty trajectory")
    }

    /// Cubic Hermite interpolation of `(u, v)` at `x ∈ [0, 1]`.
    fn sample(&self, x: f64) -> (f64, f64) {
        let steps = self.states.len() - 1;
        let pos = (x / RK4_STEP).clamp(0.0, steps as f64);
        let k = (pos.floor() as usize).min(steps - 1);
        let t = pos - k as f64;
        let (a, b) = (self.states[k], self.states[k + 1]);
        let h = RK4_STEP;
        let hermite = |y0: f64, d0: f64, y1: f64, d1: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                + (t3 - 2.0 * t2 + t) * h * d0
                + (-2.0 * t3 + 3.0 * t2) * y1
                + (t3 - t2) * h * d1
        };
        (hermite(a[0], a[1], b[0], b[1]), hermite(a[2], a[3], b[2], b[3]))
    }
}

/// Integrates the shooting ODE from `(a, 0, b, 0)` together with its
/// variational equations; returns the trajectory and `∂(u(1), v(1)) / ∂(a, b)`.
fn integrate_shot(p: &ProblemParams, a: f64, b: f64) -> (Trajectory, [[f64; 2]; 2]) {
    let steps = (1.0 / RK4_STEP).round() as usize;
    // Components: (u, u', v, v') followed by its derivatives in a and in b.
    // The reaction is extended to negative arguments: intermediate Newton
    // shots may dip below zero.
    let rhs = |y: &[f64; 12]| -> [f64; 12] {
        let g = p.reaction.g_unchecked(y[0]);
        let dg = p.lambda * p.reaction.g_prime_unchecked(y[0]);
        let mut out = [0.0; 12];
        out[0] = y[1];
        out[1] = -p.lambda * g - p.nu * (y[2] - y[0]);
        out[2] = y[3];
        out[3] = -p.nu * (y[0] - y[2]) / p.d;
        for k in [4, 8] {
            out[k] = y[k + 1];
            out[k + 1] = (p.nu - dg) * y[k] - p.nu * y[k + 2];
            out[k + 2] = y[k + 3];
            out[k + 3] = p.nu * (y[k + 2] - y[k]) / p.d;
        }
        out
    };
    let add = |y: &[f64; 12], k: &[f64; 12], s: f64| -> [f64; 12] {
        let mut out = *y;
        for (o, kk) in out.iter_mut().zip(k) {
            *o += s * kk;
        }
        out
    };
    let h = RK4_STEP;
    let mut y = [0.0; 12];
    (y[0], y[2], y[4], y[10]) = (a, b, 1.0, 1.0);
    let mut states = Vec::with_capacity(steps + 1);
    states.push([y[0], y[1], y[2], y[3]]);
    for _ in 0..steps {
        let k1 = rhs(&y);
        let k2 = rhs(&add(&y, &k1, 0.5 * h));
        let k3 = rhs(&add(&y, &k2, 0.5 * h));
        let k4 = rhs(&add(&y, &k3, h));
        for j in 0..12 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        states.push([y[0], y[1], y[2], y[3]]);
        if !y.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    (Trajectory { states }, [[y[4], y[8]], [y[6], y[10]]])
}

/// Shooting from the slab center: unknown `(u(0), v(0))` with zero slopes,
/// RK4 to `x = 1`, damped Newton on `(u(1), v(1)) = 0` with the Jacobian from
/// the variational equations. Seeded at `(0, 0)` to select the minimal branch;
/// the result is sampled onto a grid of `grid_output_n` interior nodes.
///
/// The exchange mode grows like `cosh(√(ν(1 + 1/d)) x)`, so the shot map is
/// only well conditioned up to `ν` of order `10²`; beyond that Newton stalls
/// and the report says `Diverged`.
pub fn shooting_solve(p: &ProblemParams, grid_output_n: usize, tol: f64) -> Result<StationaryReport> {
    p.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("shooting tolerance must be > 0".into()));
    }
    let grid = Grid::new(grid_output_n)?;
    let (mut a, mut b) = (0.0_f64, 0.0_f64);
    let shoot = |a: f64, b: f64| {
        let (t, jac) = integrate_shot(p, a, b);
        let e = t.end();
        let complete = t.states.len() == (1.0 / RK4_STEP).round() as usize + 1;
        (complete && e.iter().chain(jac.iter().flatten()).all(|v| v.is_finite()))
            .then_some(((e[0], e[2]), jac, t))
    };

    let mut status = StationaryStatus::Diverged;
    let mut last = None;
    let mut res_norm = f64::INFINITY;
    let mut steps = 0;
    let mut current = shoot(a, b);
    for step in 0..=NEWTON_MAX_STEPS {
        steps = step;
        let Some(((r1, r2), jac, traj)) = current.take() else {
            break;
        };
        res_norm = r1.abs().max(r2.abs());
        last = Some(traj);
        if res_norm < tol {
            status = StationaryStatus::Converged;
            break;
        }
        if step == NEWTON_MAX_STEPS {
            break;
        }
        let [[j11, j12], [j21, j22]] = jac;
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let da = -(j22 * r1 - j12 * r2) / det;
        let db = -(-j21 * r1 + j11 * r2) / det;
        // Backtracking on the endpoint residual; full steps can overshoot
        // along the growing exchange mode.
        let mut t = 1.0;
        for _ in 0..BACKTRACK_STEPS {
            match shoot(a + t * da, b + t * db) {
                Some(next) if next.0 .0.abs().max(next.0 .1.abs()) < res_norm => {
                    current = Some(next);
                    break;
                }
                _ => t *= 0.5,
            }
        }
        if current.is_none() {
            // No decrease along the Newton direction: the residual is at its
            // roundoff floor.
            break;
        }
        a += t * da;
        b += t * db;
    }

    let state = match (&last, status) {
        (Some(traj), StationaryStatus::Converged) => {
            let mut u = Field::zeros(grid);
            let mut v = Field::zeros(grid);
            for i in 0..grid.n() {
                let (ui, vi) = traj.sample(grid.node(i).abs());
                u.values_mut()[i] = ui;
                v.values_mut()[i] = vi;
            }
            TwoPhaseState { u, v }
        }
        _ => TwoPhaseState::zeros(grid),
    };
    Ok(StationaryReport {
        status,
        state,
        iterations: steps,
        final_increment: res_norm,
        increments_shrinking: false,
        residual: (status == StationaryStatus::Converged).then_some(res_norm),
        monotonicity_defect: 0.0,
    })
}

/// `K_ν f = d (f - ν (-γ Δ_h + ν)^{-1} f)`.
pub fn k_nu_apply(p: &ProblemParams, f: &Field) -> Result<Field> {
    let op = HelmholtzOp::new(f.grid(), p.gamma(), p.nu)?;
    let r = op.solve(f)?;
    Ok(f.axpy(-p.nu, &r)?.scale(p.d))
}

/// Residuals of the nonlocal form of the system at `s`:
/// `(‖-Δu - λ/(1+d) (1 + K_ν) g(u)‖∞, ‖v - u + λγ (-γΔ + ν)^{-1} g(u)‖∞)`.
pub fn nonlocal_residual(p: &ProblemParams, s: &TwoPhaseState) -> Result<(f64, f64)> {
    let grid = s.grid();
    let mut g = vec![0.0; grid.n()];
    p.reaction.g_into(s.u.values(), &mut g)?;
    let g = Field::from_values(grid, g)?;
    let kg = k_nu_apply(p, &g)?;
    let forcing = g.axpy(1.0, &kg)?.scale(p.lambda / (1.0 + p.d));
    let mut lu = vec![0.0; grid.n()];
    neg_laplacian_into(grid.h(), s.u.values(), &mut lu);
    let res_u = max_diff(&lu, forcing.values());

    let op = HelmholtzOp::new(grid, p.gamma(), p.nu)?;
    let correction = op.solve(&g)?;
    let v_rec = s.u.axpy(-p.lambda * p.gamma(), &correction)?;
    let res_v = max_diff(s.v.values(), v_rec.values());
    Ok((res_u, res_v))
}

/// `λ** = (μ1 / η)(1 + κ)` with `κ = ν d / (ν + μ1 d)`; no solution exists for
/// `λ > λ**`.
pub fn nonexistence_bound(p: &ProblemParams, mu1: f64) -> Result<f64> {
    if !(mu1 > 0.0) {
        return Err(Error::InvalidArgument(format!("mu1 must be > 0, got {mu1}")));
    }
    let kappa = p.nu * p.d / (p.nu + mu1 * p.d);
    Ok(mu1 / p.reaction.eta() * (1.0 + kappa))
}

/// Smallest eigenvalue of the linearization at `s`,
/// `[[-Δ_h + ν - λ g'(u), -ν], [-ν, -dΔ_h + ν]]`, by inverse power iteration
/// on the operator shifted by `+1`.
///
/// The shifted operator must stay positive definite, i.e. the result must lie
/// above `-1`; that holds at minimal solutions, where the eigenvalue is
/// nonnegative.
pub fn linearized_principal_eigenvalue(p: &ProblemParams, s: &TwoPhaseState) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::InvalidArgument("state is not finite".into()));
    }
    let grid = s.grid();
    let n = grid.n();
    let mut diag_u = vec![0.0; n];
    for (du, &u) in diag_u.iter_mut().zip(s.u.values()) {
        *du = 1.0 - p.lambda * p.reaction.g_prime(u)?;
    }
    let diag_v = vec![1.0; n];
    let mut factor = BlockFactor::assemble(grid, p.nu, p.d, &diag_u, &diag_v)?;
    let mut u_half = vec![0.0; n];
    let mut v_half = vec![0.0; n];
    let (_, x) = positive_inverse_iteration(2 * n, |z| {
        let (f, g) = z.split_at(n);
        factor.solve_into(f, g, &mut u_half, &mut v_half);
        z[..n].copy_from_slice(&u_half);
        z[n..].copy_from_slice(&v_half);
    })?;

    // Rayleigh quotient of the unshifted operator.
    let phi = Field::from_values(grid, x[..n].to_vec())?;
    let psi = Field::from_values(grid, x[n..].to_vec())?;
    let (mut lf, mut lg) = BlockOp::new(grid, p.nu, p.d)?.apply(&phi, &psi)?;
    for i in 0..n {
        lf.values_mut()[i] += (diag_u[i] - 1.0) * phi.values()[i];
    }
    let num = lf.dot(&phi) + lg.dot(&psi);
    lg = psi.clone();
    let den = phi.dot(&phi) + lg.dot(&psi);
    Ok(num / den)
}
