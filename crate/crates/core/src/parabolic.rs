//! Time integration of the coupled parabolic system
//!
//! ```text
//! U_t   - ΔU   = λ g(U) + ν (V - U)
//! α V_t - dΔV  = ν (U - V)
//! ```
//!
//! from zero data. The stepper is first-order IMEX: diffusion and exchange
//! are implicit, the reaction is explicit at the old level. Because the
//! implicit part is the convex piece of the energy and `λΦ` is concave, each
//! step is a convex-splitting step and the discrete energy is nonincreasing
//! for any `dt`. The same structure keeps the scheme order preserving: from
//! zero data the iterates increase in time and stay below any stationary
//! solution.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::grid::{max_norm, Field, Grid};
use crate::linsolve::{BlockFactor, BlockOp};
use crate::stationary::{ProblemParams, StationaryReport, StationaryStatus, TwoPhaseState};

/// Smallest admissible time step.
pub const DT_MIN: f64 = 1e-12;
const HALVE_ABOVE: f64 = 0.1;
const DOUBLE_BELOW: f64 = 0.01;
const BLOWUP_HALVINGS: usize = 10;
const BLOWUP_WINDOW: usize = 100;
const ENERGY_SLACK: f64 = 1e-8;
const ENERGY_RETRIES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveParams {
    pub problem: ProblemParams,
    /// Heat-capacity ratio of the second phase.
    pub alpha: f64,
    pub dt0: f64,
    pub t_end: f64,
    pub blowup_threshold: f64,
    pub steady_tol: f64,
    /// Trace sampling interval in model time.
    pub output_interval: f64,
    /// Keep a full state at every trace sample.
    pub store_snapshots: bool,
    /// Nonzero initial data; `None` starts from `(0, 0)`.
    pub initial: Option<TwoPhaseState>,
}

impl EvolveParams {
    pub fn new(problem: ProblemParams, alpha: f64) -> Self {
        Self {
            problem,
            alpha,
            dt0: 1e-3,
            t_end: 100.0,
            blowup_threshold: problem.reaction.default_blowup_threshold(),
            steady_tol: 1e-9,
            output_interval: 0.05,
            store_snapshots: false,
            initial: None,
        }
    }

    fn validate(&self, grid: Grid) -> Result<()> {
        self.problem.validate()?;
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be finite and > 0, got {x}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("dt0", self.dt0)?;
        positive("t_end", self.t_end)?;
        positive("blowup_threshold", self.blowup_threshold)?;
        positive("steady_tol", self.steady_tol)?;
        positive("output_interval", self.output_interval)?;
        if self.dt0 < DT_MIN {
            return Err(Error::InvalidArgument(format!("dt0 must be >= {DT_MIN:e}")));
        }
        if let Some(s) = &self.initial {
            grid.check(&s.grid())?;
            if s.u.values().iter().chain(s.v.values()).any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Error::InvalidArgument(
                    "initial data must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolveOutcome {
    SteadyState,
    BlowUp,
    TimeLimitReached,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub max_u: f64,
    pub max_v: f64,
    pub energy: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub state: TwoPhaseState,
}

#[derive(Debug, Clone)]
pub struct EvolveReport {
    pub outcome: EvolveOutcome,
    /// End time; for `BlowUp` the time `max U` crossed the threshold, a lower
    /// bound on the singularity time.
    pub t_final: f64,
    pub state: TwoPhaseState,
    pub trace: Vec<TraceSample>,
    pub snapshots: Vec<Snapshot>,
    pub problem: ProblemParams,
    pub steps: usize,
    pub halvings: usize,
    /// Whether the run started from zero data.
    pub zero_initial_data: bool,
}

/// Discrete energy
/// `½ (⟨-Δ_h U, U⟩ + d ⟨-Δ_h V, V⟩ + ν ‖U - V‖²) + λ Σ_i h Φ(U_i)`.
///
/// The gradient terms are one-sided differences on the `n + 1` cell edges,
/// boundary edges included.
pub fn energy(s: &TwoPhaseState, p: &ProblemParams) -> Result<f64> {
    energy_of(s.u.values(), s.v.values(), s.grid().h(), p)
}

fn energy_of(u: &[f64], v: &[f64], h: f64, p: &ProblemParams) -> Result<f64> {
    let n = u.len();
    let edge_sum = |w: &[f64]| {
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &x in w.iter().chain(std::iter::once(&0.0)) {
            let dx = (x - prev) / h;
            acc += dx * dx;
            prev = x;
        }
        h * acc
    };
    let mut exchange = 0.0;
    let mut potential = 0.0;
    for i in 0..n {
        exchange += (u[i] - v[i]).powi(2);
        potential += p.reaction.phi(u[i])?;
    }
    Ok(0.5 * (edge_sum(u) + p.d * edge_sum(v) + p.nu * h * exchange) + p.lambda * h * potential)
}

struct StepperCache {
    grid: Grid,
    problem: ProblemParams,
    alpha: f64,
    dt0: f64,
    // Factorizations indexed by the number of halvings below dt0.
    levels: Vec<Option<BlockFactor>>,
}

impl StepperCache {
    fn factor(&mut self, level: usize) -> Result<&mut BlockFactor> {
        if self.levels.len() <= level {
            self.levels.resize_with(level + 1, || None);
        }
        if self.levels[level].is_none() {
            let dt = self.dt0 / 2f64.powi(level as i32);
            let op = BlockOp::with_shifts(
                self.grid,
                self.problem.nu,
                self.problem.d,
                1.0 / dt,
                self.alpha / dt,
            )?;
            self.levels[level] = Some(op.factorize()?);
        }
        Ok(self.levels[level].as_mut().expect("factor just built"))
    }
}

/// Integrates from the initial data and classifies the outcome.
pub fn evolve(params: &EvolveParams, grid: Grid) -> Result<EvolveReport> {
    params.validate(grid)?;
    let p = params.problem;
    let n = grid.n();
    let h = grid.h();
    let (mut u, mut v) = match &params.initial {
        Some(s) => (s.u.values().to_vec(), s.v.values().to_vec()),
        None => (vec![0.0; n], vec![0.0; n]),
    };
    let mut cache = StepperCache {
        grid,
        problem: p,
        alpha: params.alpha,
        dt0: params.dt0,
        levels: Vec::new(),
    };

    let mut rhs_u = vec![0.0; n];
    let mut rhs_v = vec![0.0; n];
    let mut new_u = vec![0.0; n];
    let mut new_v = vec![0.0; n];
    let mut g = vec![0.0; n];

    let mut t = 0.0_f64;
    let mut level = 0usize;
    let mut steps = 0usize;
    let mut halvings = 0usize;
    let mut recent_halvings: VecDeque<usize> = VecDeque::new();
    let mut e_old = energy_of(&u, &v, h, &p)?;

    let mut trace = Vec::new();
    let mut snapshots = Vec::new();
    let record = |t: f64,
                      u: &[f64],
                      v: &[f64],
                      e: f64,
                      dt: f64,
                      trace: &mut Vec<TraceSample>,
                      snapshots: &mut Vec<Snapshot>|
     -> Result<()> {
        trace.push(TraceSample {
            t,
            max_u: u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            max_v: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            energy: e,
            dt,
        });
        if params.store_snapshots {
            snapshots.push(Snapshot {
                t,
                state: TwoPhaseState {
                    u: Field::from_values(grid, u.to_vec())?,
                    v: Field::from_values(grid, v.to_vec())?,
                },
            });
        }
        Ok(())
    };
    record(t, &u, &v, e_old, params.dt0, &mut trace, &mut snapshots)?;
    let mut next_output = params.output_interval;
    let mut last_recorded_max = max_norm(&u);

    let dt_at = |level: usize| params.dt0 / 2f64.powi(level as i32);

    let outcome = loop {
        if t >= params.t_end * (1.0 - 1e-14) {
            break EvolveOutcome::TimeLimitReached;
        }

        p.reaction.g_into(&u, &mut g)?;
        let umax = max_norm(&u);
        let forcing = p.lambda * max_norm(&g);
        let scale = umax.max(max_norm(&v)).max(1.0);

        // Adapt dt on the explicit reaction increment.
        let mut halved_now = 0;
        while dt_at(level) * forcing / scale > HALVE_ABOVE {
            level += 1;
            halved_now += 1;
            if dt_at(level) < DT_MIN {
                if umax > params.blowup_threshold {
                    break;
                }
                return Err(Error::NumericalFailure(format!(
                    "time step fell below {DT_MIN:e} at t = {t} with max U = {umax} below the blow-up threshold"
                )));
            }
        }
        if halved_now == 0 && level > 0 && dt_at(level) * forcing / scale < DOUBLE_BELOW {
            level -= 1;
        }
        for _ in 0..halved_now {
            recent_halvings.push_back(steps);
        }
        halvings += halved_now;
        while recent_halvings
            .front()
            .is_some_and(|&s| s + BLOWUP_WINDOW <= steps)
        {
            recent_halvings.pop_front();
        }
        if umax > params.blowup_threshold
            && (recent_halvings.len() >= BLOWUP_HALVINGS || dt_at(level) < DT_MIN)
        {
            break EvolveOutcome::BlowUp;
        }

        // One IMEX step, retried with a smaller dt if the energy rises.
        let mut retries = 0;
        let (dt, e_new) = loop {
            let dt = dt_at(level);
            for i in 0..n {
                rhs_u[i] = u[i] / dt + p.lambda * g[i];
                rhs_v[i] = params.alpha * v[i] / dt;
            }
            cache.factor(level)?.solve_into(&rhs_u, &rhs_v, &mut new_u, &mut new_v);
            if !new_u.iter().chain(&new_v).all(|x| x.is_finite()) {
                return Err(Error::NumericalFailure(format!(
                    "non-finite state at t = {t} (dt = {dt:e})"
                )));
            }
            let e_new = energy_of(&new_u, &new_v, h, &p)?;
            if e_new <= e_old + ENERGY_SLACK * e_old.abs().max(1.0) {
                break (dt, e_new);
            }
            retries += 1;
            if retries > ENERGY_RETRIES || dt_at(level + 1) < DT_MIN {
                return Err(Error::NumericalFailure(format!(
                    "discrete energy increased at t = {t} despite {retries} step halvings"
                )));
            }
            level += 1;
            halvings += 1;
            recent_halvings.push_back(steps);
        };

        let mut rate = 0.0_f64;
        let mut rate_v = 0.0_f64;
        for i in 0..n {
            rate = rate.max((new_u[i] - u[i]).abs() / dt);
            rate_v = rate_v.max((new_v[i] - v[i]).abs() / dt);
        }
        std::mem::swap(&mut u, &mut new_u);
        std::mem::swap(&mut v, &mut new_v);
        t += dt;
        steps += 1;
        e_old = e_new;

        let umax = max_norm(&u);
        if t >= next_output || umax > 1.1 * last_recorded_max + 1e-2 {
            record(t, &u, &v, e_new, dt, &mut trace, &mut snapshots)?;
            last_recorded_max = umax;
            while next_output <= t {
                next_output += params.output_interval;
            }
        }
        if level == 0 && rate + rate_v < params.steady_tol {
            break EvolveOutcome::SteadyState;
        }
    };

    if trace.last().is_none_or(|s| s.t < t) {
        record(t, &u, &v, e_old, dt_at(level), &mut trace, &mut snapshots)?;
    }
    Ok(EvolveReport {
        outcome,
        t_final: t,
        state: TwoPhaseState {
            u: Field::from_values(grid, u)?,
            v: Field::from_values(grid, v)?,
        },
        trace,
        snapshots,
        problem: p,
        steps,
        halvings,
        zero_initial_data: params.initial.is_none(),
    })
}

const MONOTONE_SLACK: f64 = 1e-10;

/// True iff `max U`, `max V` and every stored snapshot are nondecreasing in
/// time.
pub fn monotonicity_check(report: &EvolveReport) -> bool {
    let traces_ok = report.trace.windows(2).all(|w| {
        w[1].max_u >= w[0].max_u - MONOTONE_SLACK && w[1].max_v >= w[0].max_v - MONOTONE_SLACK
    });
    let snaps_ok = report.snapshots.windows(2).all(|w| {
        w[1].state.u.deficit_below(&w[0].state.u) <= MONOTONE_SLACK
            && w[1].state.v.deficit_below(&w[0].state.v) <= MONOTONE_SLACK
    });
    traces_ok && snaps_ok
}

/// h-weighted L1 distance between a steady parabolic state and a converged
/// stationary solution on the same grid.
pub fn compare_with_stationary(report: &EvolveReport, s: &StationaryReport) -> Result<f64> {
    if report.outcome != EvolveOutcome::SteadyState {
        return Err(Error::InvalidArgument(format!(
            "evolution ended in {:?}, not a steady state",
            report.outcome
        )));
    }
    if s.status != StationaryStatus::Converged {
        return Err(Error::InvalidArgument(format!(
            "stationary solve ended in {:?}, not converged",
            s.status
        )));
    }
    if report.state.grid() != s.state.grid() {
        return Err(Error::InvalidArgument(format!(
            "grids differ: {} vs {} interior nodes",
            report.state.grid().n(),
            s.state.grid().n()
        )));
    }
    report.state.l1_distance(&s.state)
}
