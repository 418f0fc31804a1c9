//! Critical parameter `λ*(ν)` by bisection over certified existence.
//!
//! Each probe runs the monotone iteration; convergence certifies a minimal
//! solution at that `λ`, divergence certifies (at grid level) that there is
//! none. The initial upper end is the a priori nonexistence bound, so the
//! bracket is valid from the first step.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{max_norm, Field, Grid};
use crate::linsolve::{principal_eigenpair, HelmholtzOp};
use crate::reaction::Reaction;
use crate::stationary::{
    monotone_iterate_from, nonexistence_bound, MonotoneOptions, ProblemParams, StationaryReport,
    StationaryStatus, TwoPhaseState,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalOptions {
    /// Bisection stops once `upper - lower <= bracket_tol`.
    pub bracket_tol: f64,
    pub monotone: MonotoneOptions,
    /// A probe that hits the iteration cap with shrinking increments is
    /// continued for `retry_factor * max_iter` more sweeps before it counts
    /// as nonexistence.
    pub retry_factor: usize,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        Self {
            bracket_tol: 1e-4,
            monotone: MonotoneOptions::default(),
            retry_factor: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalResult {
    pub nu: f64,
    /// Bracket midpoint.
    pub lambda_star: f64,
    /// `upper - lower` of the final bracket.
    pub bracket_width: f64,
    /// Largest `λ` with a converged minimal solution.
    pub lower: f64,
    /// Smallest `λ` classified as nonexistence.
    pub upper: f64,
    /// Number of probe solves, retries included.
    pub evaluations: usize,
}

#[derive(Debug)]
pub struct SweepEntry {
    pub nu: f64,
    pub result: Result<CriticalResult>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub d: f64,
    pub reaction: Reaction,
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    /// Successful entries in input order.
    pub fn critical_values(&self) -> Vec<&CriticalResult> {
        self.entries.iter().filter_map(|e| e.result.as_ref().ok()).collect()
    }
}

/// Bisects `[0, upper]` on existence. `probe(λ, seed)` runs one solve seeded
/// from the converged state at the current lower end.
fn bisect_existence(
    upper_bound: f64,
    grid: Grid,
    opts: &CriticalOptions,
    mut probe: impl FnMut(f64, Option<&TwoPhaseState>, &MonotoneOptions) -> Result<StationaryReport>,
) -> Result<(f64, f64, usize)> {
    if !(opts.bracket_tol > 0.0) {
        return Err(Error::InvalidArgument("bracket_tol must be > 0".into()));
    }
    let mut evaluations = 0usize;
    let mut exists = |lambda: f64, seed: Option<&TwoPhaseState>| -> Result<Option<TwoPhaseState>> {
        evaluations += 1;
        let mut report = probe(lambda, seed, &opts.monotone)?;
        if report.status == StationaryStatus::IterationCapReached && report.increments_shrinking {
            // The last iterate is still below the minimal solution, so the
            // retry continues the same monotone sequence.
            let longer = MonotoneOptions {
                max_iter: opts.monotone.max_iter * opts.retry_factor,
                ..opts.monotone
            };
            let last = report.state.clone();
            evaluations += 1;
            report = probe(lambda, Some(&last), &longer)?;
        }
        Ok(report.converged().then_some(report.state))
    };

    if exists(upper_bound, None)?.is_some() {
        return Err(Error::Inconsistency(format!(
            "monotone iteration converged at the nonexistence bound λ = {upper_bound}"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, upper_bound);
    let mut lo_state = TwoPhaseState::zeros(grid);
    while hi - lo > opts.bracket_tol {
        let mid = 0.5 * (lo + hi);
        match exists(mid, Some(&lo_state))? {
            Some(state) => {
                lo = mid;
                lo_state = state;
            }
            None => hi = mid,
        }
    }
    Ok((lo, hi, evaluations))
}

/// Locates `λ*(ν)` for the two-phase system on `grid`.
pub fn find_lambda_star(
    nu: f64,
    d: f64,
    reaction: Reaction,
    grid: Grid,
    opts: &CriticalOptions,
) -> Result<CriticalResult> {
    let base = ProblemParams::new(0.0, nu, d, reaction)?;
    let (mu1, _) = principal_eigenpair(grid)?;
    let upper = nonexistence_bound(&base, mu1)?;
    let (lower, upper, evaluations) = bisect_existence(upper, grid, opts, |lambda, seed, mo| {
        monotone_iterate_from(&base.with_lambda(lambda), grid, mo, seed)
    })?;
    Ok(CriticalResult {
        nu,
        lambda_star: 0.5 * (lower + upper),
        bracket_width: upper - lower,
        lower,
        upper,
        evaluations,
    })
}

/// [`find_lambda_star`] over a strictly increasing list of `ν` values.
///
/// Entries are independent and run on a pool of at most `jobs` workers
/// (`None` uses the global pool); results come back in input order and a
/// failed entry does not abort the others.
pub fn sweep_nu(
    nu_values: &[f64],
    d: f64,
    reaction: Reaction,
    grid: Grid,
    opts: &CriticalOptions,
    jobs: Option<usize>,
) -> Result<SweepResult> {
    if nu_values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one nu value".into()));
    }
    if nu_values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("sweep nu values must be strictly increasing".into()));
    }
    let run = || -> Vec<SweepEntry> {
        nu_values
            .par_iter()
            .map(|&nu| SweepEntry {
                nu,
                result: find_lambda_star(nu, d, reaction, grid, opts),
            })
            .collect()
    };
    let entries = match jobs {
        Some(0) => return Err(Error::InvalidArgument("jobs must be >= 1".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?
            .install(run),
        None => run(),
    };
    Ok(SweepResult {
        d,
        reaction,
        entries,
    })
}

/// `count` logarithmically spaced values on `[lo, hi]`, endpoints included.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// Scalar monotone iteration for `-Δ_h w = Λ s g(w)`.
///
/// Returned as a [`StationaryReport`] whose `v` component is identically
/// zero.
pub fn classical_iterate(
    reaction: Reaction,
    lambda_scaled: f64,
    grid: Grid,
    opts: &MonotoneOptions,
    seed: Option<&TwoPhaseState>,
) -> Result<StationaryReport> {
    let lap = HelmholtzOp::new(grid, 1.0, 0.0)?;
    let mut w = match seed {
        Some(s) => {
            grid.check(&s.grid())?;
            s.u.values().to_vec()
        }
        None => vec![0.0; grid.n()],
    };
    let mut next = vec![0.0; grid.n()];
    let mut status = StationaryStatus::IterationCapReached;
    let (mut inc, mut prev_inc) = (f64::INFINITY, f64::INFINITY);
    let mut growing = 0;
    let mut defect = 0.0_f64;
    let mut iterations = 0;
    for k in 1..=opts.max_iter {
        iterations = k;
        reaction.g_into(&w, &mut next)?;
        next.iter_mut().for_each(|x| *x *= lambda_scaled);
        lap.solve_in_place(&mut next);
        if !next.iter().all(|x| x.is_finite()) {
            status = StationaryStatus::Diverged;
            break;
        }
        let step = next
            .iter()
            .zip(&w)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        defect = next.iter().zip(&w).fold(defect, |m, (a, b)| m.max(b - a));
        std::mem::swap(&mut w, &mut next);
        prev_inc = inc;
        inc = step;
        if inc < opts.tol {
            status = StationaryStatus::Converged;
            break;
        }
        if max_norm(&w) > opts.divergence_cap {
            status = StationaryStatus::Diverged;
            break;
        }
        if inc > prev_inc {
            growing += 1;
            if growing >= opts.growth_window {
                status = StationaryStatus::Diverged;
                break;
            }
        } else {
            growing = 0;
        }
    }
    Ok(StationaryReport {
        status,
        state: TwoPhaseState {
            u: Field::from_values(grid, w)?,
            v: Field::zeros(grid),
        },
        iterations,
        final_increment: inc,
        increments_shrinking: inc < prev_inc,
        residual: None,
        monotonicity_defect: defect,
    })
}

/// Critical value of the scalar problem `-Δw = Λ s g(w)`; `scale = 1` gives
/// the classical Gelfand value `Λ*`.
pub fn classical_lambda_star_scaled(
    reaction: Reaction,
    scale: f64,
    grid: Grid,
    opts: &CriticalOptions,
) -> Result<CriticalResult> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be > 0, got {scale}")));
    }
    let (mu1, _) = principal_eigenpair(grid)?;
    let upper = mu1 / (scale * reaction.eta());
    let (lower, upper, evaluations) = bisect_existence(upper, grid, opts, |lambda, seed, mo| {
        classical_iterate(reaction, lambda * scale, grid, mo, seed)
    })?;
    Ok(CriticalResult {
        nu: 0.0,
        lambda_star: 0.5 * (lower + upper),
        bracket_width: upper - lower,
        lower,
        upper,
        evaluations,
    })
}

/// Classical Gelfand critical value `Λ*` on `grid`.
pub fn classical_lambda_star(reaction: Reaction, grid: Grid, opts: &CriticalOptions) -> Result<f64> {
    Ok(classical_lambda_star_scaled(reaction, 1.0, grid, opts)?.lambda_star)
}
