//! Command-line front end.
//!
//! Every command prints one summary line of space-separated `key=value`
//! pairs on stdout and, with `--output`, writes its CSV there (plus an SVG
//! next to it with `--plot`). Exit codes: 0 success, 3 success with a
//! diverged/blow-up outcome, 1 usage error, 2 numerical failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Parser, ValueEnum};

use crate::continuation::{
    classical_lambda_star_scaled, find_lambda_star, log_spaced, sweep_nu, CriticalOptions,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::{eigen_csv, fmt_float, parse_config, state_csv, sweep_csv, trace_csv, write_file};
use crate::linsolve::principal_eigenpair;
use crate::parabolic::{energy, evolve, EvolveOutcome, EvolveParams};
use crate::reaction::Reaction;
use crate::stationary::{
    linearized_principal_eigenvalue, monotone_iterate, shooting_solve, MonotoneOptions,
    ProblemParams, StationaryStatus,
};
use crate::svg::{LinePlot, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_NO_SOLUTION: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Minimal stationary solution at fixed λ.
    Stationary,
    /// Critical value λ*(ν).
    LambdaStar,
    /// λ*(ν) over a list of ν values.
    Sweep,
    /// Parabolic evolution from zero data.
    Evolve,
    /// Principal eigenpair of -Δ_h (and the linearized eigenvalue with --lambda/--nu).
    Eigen,
    /// Classical Gelfand critical value Λ*.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Method {
    #[default]
    Monotone,
    Shooting,
}

#[derive(Debug, Parser)]
#[command(
    name = "twophase",
    version,
    about = "Two-phase Gelfand problem: minimal solutions, critical values, blow-up",
    allow_negative_numbers = true
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long = "d")]
    d: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Reaction: `exp` or `pow:<p>`.
    #[arg(long = "g")]
    g: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    bracket_tol: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt0: Option<f64>,
    #[arg(long)]
    blowup_threshold: Option<f64>,
    #[arg(long)]
    steady_tol: Option<f64>,
    /// Comma-separated ν list for `sweep`; overrides the log-spaced range.
    #[arg(long)]
    nu_values: Option<String>,
    #[arg(long)]
    nu_min: Option<f64>,
    #[arg(long)]
    nu_max: Option<f64>,
    #[arg(long)]
    nu_count: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Final-state CSV for `evolve`.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[arg(long)]
    plot: bool,
    /// Flat key=value file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub lambda: Option<f64>,
    pub nu: Option<f64>,
    pub d: f64,
    pub alpha: f64,
    pub reaction: Reaction,
    pub n: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub bracket_tol: f64,
    pub t_end: f64,
    pub dt0: f64,
    pub blowup_threshold: Option<f64>,
    pub steady_tol: f64,
    pub nu_values: Vec<f64>,
    pub jobs: Option<usize>,
    pub method: Method,
    pub output: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    pub plot: bool,
}

const CONFIG_KEYS: &[&str] = &[
    "lambda", "nu", "d", "alpha", "g", "n", "tol", "max-iter", "bracket-tol", "t-end", "dt0",
    "blowup-threshold", "steady-tol", "nu-values", "nu-min", "nu-max", "nu-count", "jobs",
    "method", "output", "snapshot", "plot",
];

struct Merge {
    file: BTreeMap<String, String>,
}

impl Merge {
    fn pick<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                Error::InvalidArgument(format!("config value for '{key}' is invalid: '{raw}'"))
            }),
        }
    }
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidArgument(format!("--{name} must be finite and > 0, got {x}")))
    }
}

impl RunConfig {
    fn from_cli(cli: Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(path) => parse_config(&std::fs::read_to_string(path).map_err(|e| {
                Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
            })?)?,
            None => BTreeMap::new(),
        };
        if let Some(bad) = file.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!("unknown config key '{bad}'")));
        }
        let m = Merge { file };

        let reaction: Reaction = m.pick("g", cli.g)?.unwrap_or_else(|| "exp".into()).parse()?;
        let method = match cli.method {
            Some(x) => x,
            None => match m.file.get("method") {
                Some(s) => Method::from_str(s, true)
                    .map_err(|_| Error::InvalidArgument(format!("unknown method '{s}'")))?,
                None => Method::default(),
            },
        };
        let plot = cli.plot || m.pick::<bool>("plot", None)?.unwrap_or(false);

        let nu_list: Option<String> = m.pick("nu-values", cli.nu_values)?;
        let nu_values = match nu_list {
            Some(list) => list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad nu value '{s}'")))
                })
                .collect::<Result<Vec<_>>>()?,
            None => {
                let lo = positive("nu-min", m.pick("nu-min", cli.nu_min)?.unwrap_or(1e-2))?;
                let hi = positive("nu-max", m.pick("nu-max", cli.nu_max)?.unwrap_or(1e3))?;
                let count = m.pick("nu-count", cli.nu_count)?.unwrap_or(24);
                if count == 0 || (count > 1 && !(hi > lo)) {
                    return Err(Error::InvalidArgument(
                        "sweep needs nu-count >= 1 and nu-max > nu-min".into(),
                    ));
                }
                log_spaced(lo, hi, count)
            }
        };

        let cfg = RunConfig {
            command: cli.command,
            lambda: m.pick("lambda", cli.lambda)?,
            nu: m.pick("nu", cli.nu)?,
            d: positive("d", m.pick("d", cli.d)?.unwrap_or(1.0))?,
            alpha: positive("alpha", m.pick("alpha", cli.alpha)?.unwrap_or(1.0))?,
            reaction,
            n: m.pick("n", cli.n)?.unwrap_or(199),
            tol: positive("tol", m.pick("tol", cli.tol)?.unwrap_or(1e-10))?,
            max_iter: m.pick("max-iter", cli.max_iter)?.unwrap_or(10_000),
            bracket_tol: positive("bracket-tol", m.pick("bracket-tol", cli.bracket_tol)?.unwrap_or(1e-4))?,
            t_end: positive("t-end", m.pick("t-end", cli.t_end)?.unwrap_or(100.0))?,
            dt0: positive("dt0", m.pick("dt0", cli.dt0)?.unwrap_or(1e-3))?,
            blowup_threshold: m
                .pick("blowup-threshold", cli.blowup_threshold)?
                .map(|x| positive("blowup-threshold", x))
                .transpose()?,
            steady_tol: positive("steady-tol", m.pick("steady-tol", cli.steady_tol)?.unwrap_or(1e-9))?,
            nu_values,
            jobs: m.pick("jobs", cli.jobs)?,
            method,
            output: m.pick("output", cli.output)?,
            snapshot: m.pick("snapshot", cli.snapshot)?,
            plot,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidArgument(format!("--n must be >= 3, got {}", self.n)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("--max-iter must be >= 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidArgument("--jobs must be >= 1".into()));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidArgument(format!("--lambda must be >= 0, got {l}")));
            }
        }
        if let Some(nu) = self.nu {
            positive("nu", nu)?;
        }
        if self.plot && self.output.is_none() {
            return Err(Error::InvalidArgument("--plot needs --output".into()));
        }
        let needs = |flag: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "command needs --{flag}"
                )))
            }
        };
        match self.command {
            Command::Stationary | Command::Evolve => {
                needs("lambda", self.lambda.is_some())?;
                needs("nu", self.nu.is_some())?;
            }
            Command::LambdaStar => needs("nu", self.nu.is_some())?,
            Command::Eigen => {
                if self.lambda.is_some() != self.nu.is_some() {
                    return Err(Error::InvalidArgument(
                        "eigen takes --lambda and --nu together".into(),
                    ));
                }
            }
            Command::Sweep | Command::Classical => {}
        }
        Ok(())
    }

    fn monotone(&self) -> MonotoneOptions {
        MonotoneOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            ..MonotoneOptions::default()
        }
    }

    fn critical(&self) -> CriticalOptions {
        CriticalOptions {
            bracket_tol: self.bracket_tol,
            monotone: self.monotone(),
            ..CriticalOptions::default()
        }
    }

    fn problem(&self) -> Result<ProblemParams> {
        ProblemParams::new(
            self.lambda.unwrap_or(0.0),
            self.nu.unwrap_or(1.0),
            self.d,
            self.reaction,
        )
    }
}

/// Parses `argv` (program name first) into a [`RunConfig`].
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, ArgsError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(ArgsError::Clap)?;
    RunConfig::from_cli(cli).map_err(ArgsError::Invalid)
}

#[derive(Debug)]
pub enum ArgsError {
    Clap(clap::Error),
    Invalid(Error),
}

/// Output of a command: summary pairs and the exit code it maps to.
struct Outcome {
    summary: Vec<(&'static str, String)>,
    code: i32,
}

impl Outcome {
    fn line(&self) -> String {
        self.summary
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(argv) {
        Ok(cfg) => cfg,
        Err(ArgsError::Clap(e)) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
        Err(ArgsError::Invalid(e)) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match execute(&cfg) {
        Ok(out) => {
            println!("{}", out.line());
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NumericalFailure(_) | Error::Inconsistency(_) | Error::Domain(_) => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn write_outputs(cfg: &RunConfig, csv: &str, plot: impl FnOnce() -> Result<LinePlot>) -> Result<()> {
    let Some(path) = &cfg.output else {
        return Ok(());
    };
    write_file(path, csv).map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))?;
    if cfg.plot {
        let svg_path = svg_path(path);
        write_file(&svg_path, &plot()?.render())
            .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", svg_path.display())))?;
    }
    Ok(())
}

fn svg_path(path: &Path) -> PathBuf {
    path.with_extension("svg")
}

fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let grid = Grid::new(cfg.n)?;
    let started = Instant::now();
    let mut out = match cfg.command {
        Command::Stationary => cmd_stationary(cfg, grid)?,
        Command::LambdaStar => cmd_lambda_star(cfg, grid)?,
        Command::Sweep => cmd_sweep(cfg, grid)?,
        Command::Evolve => cmd_evolve(cfg, grid)?,
        Command::Eigen => cmd_eigen(cfg, grid)?,
        Command::Classical => cmd_classical(cfg, grid)?,
    };
    out.summary.push(("n", cfg.n.to_string()));
    out.summary.push(("elapsed_s", format!("{:.3}", started.elapsed().as_secs_f64())));
    Ok(out)
}

fn cmd_stationary(cfg: &RunConfig, grid: Grid) -> Result<Outcome> {
    let p = cfg.problem()?;
    let report = match cfg.method {
        Method::Monotone => monotone_iterate(&p, grid, &cfg.monotone())?,
        Method::Shooting => shooting_solve(&p, cfg.n, cfg.tol)?,
    };
    let status = match report.status {
        StationaryStatus::Converged => "converged",
        StationaryStatus::Diverged => "diverged",
        StationaryStatus::IterationCapReached => "iteration-cap",
    };
    let converged = report.converged();
    if converged {
        write_outputs(cfg, &state_csv(&report.state, None), || {
            let x = grid.nodes();
            let pts = |f: &[f64]| x.iter().copied().zip(f.iter().copied()).collect::<Vec<_>>();
            Ok(LinePlot::new(
                &format!("Minimal solution, λ={} ν={} d={}", fmt_float(p.lambda), fmt_float(p.nu), fmt_float(p.d)),
                "x",
                "temperature",
            )
            .with(Series::solid("u", pts(report.state.u.values())))
            .with(Series::dashed("v", pts(report.state.v.values()))))
        })?;
    }
    let method = match cfg.method {
        Method::Monotone => "monotone",
        Method::Shooting => "shooting",
    };
    let mut summary = vec![
        ("command", "stationary".to_string()),
        ("method", method.to_string()),
        ("status", status.to_string()),
        ("lambda", fmt_float(p.lambda)),
        ("nu", fmt_float(p.nu)),
        ("d", fmt_float(p.d)),
        ("iterations", report.iterations.to_string()),
    ];
    if converged {
        summary.push(("u_max", fmt_float(report.state.u.max())));
        summary.push(("v_max", fmt_float(report.state.v.max())));
        summary.push(("residual", fmt_float(report.residual.unwrap_or(f64::NAN))));
    }
    Ok(Outcome {
        summary,
        code: if converged { EXIT_OK } else { EXIT_NO_SOLUTION },
    })
}

fn cmd_lambda_star(cfg: &RunConfig, grid: Grid) -> Result<Outcome> {
    let nu = cfg.nu.expect("validated");
    let r = find_lambda_star(nu, cfg.d, cfg.reaction, grid, &cfg.critical())?;
    let csv = format!(
        "nu,lambda_star,bracket_width\n{},{},{}\n",
        fmt_float(r.nu),
        fmt_float(r.lambda_star),
        fmt_float(r.bracket_width)
    );
    write_outputs(cfg, &csv, || {
        let p = ProblemParams::new(r.lower, nu, cfg.d, cfg.reaction)?;
        let s = monotone_iterate(&p, grid, &cfg.monotone())?;
        let x = grid.nodes();
        let pts = |f: &[f64]| x.iter().copied().zip(f.iter().copied()).collect::<Vec<_>>();
        Ok(LinePlot::new(
            &format!("Minimal solution just below λ*={}", fmt_float(r.lambda_star)),
            "x",
            "temperature",
        )
        .with(Series::solid("u", pts(s.state.u.values())))
        .with(Series::dashed("v", pts(s.state.v.values()))))
    })?;
    Ok(Outcome {
        summary: vec![
            ("command", "lambda-star".into()),
            ("nu", fmt_float(nu)),
            ("d", fmt_float(cfg.d)),
            ("lambda_star", fmt_float(r.lambda_star)),
            ("bracket_width", fmt_float(r.bracket_width)),
            ("evaluations", r.evaluations.to_string()),
        ],
        code: EXIT_OK,
    })
}

fn cmd_sweep(cfg: &RunConfig, grid: Grid) -> Result<Outcome> {
    let sweep = sweep_nu(&cfg.nu_values, cfg.d, cfg.reaction, grid, &cfg.critical(), cfg.jobs)?;
    let ok = sweep.critical_values();
    let failures = sweep.entries.len() - ok.len();
    let lo = ok.iter().map(|r| r.lambda_star).fold(f64::INFINITY, f64::min);
    let hi = ok.iter().map(|r| r.lambda_star).fold(f64::NEG_INFINITY, f64::max);
    let monotone = ok
        .windows(2)
        .all(|w| w[1].lambda_star >= w[0].lambda_star - w[0].bracket_width.max(w[1].bracket_width));
    write_outputs(cfg, &sweep_csv(&sweep), || {
        let curve: Vec<(f64, f64)> = ok.iter().map(|r| (r.nu.log10(), r.lambda_star)).collect();
        let limit = (1.0 + cfg.d)
            * classical_lambda_star_scaled(cfg.reaction, 1.0, grid, &cfg.critical())?.lambda_star;
        let ends = match (curve.first(), curve.last()) {
            (Some(a), Some(b)) => vec![(a.0, limit), (b.0, limit)],
            _ => Vec::new(),
        };
        Ok(LinePlot::new(
            &format!("Critical value λ* against ν (d={})", fmt_float(cfg.d)),
            "log10 ν",
            "λ*",
        )
        .with(Series::solid("λ*(ν)", curve))
        .with(Series::dashed("(1+d)Λ*", ends)))
    })?;
    Ok(Outcome {
        summary: vec![
            ("command", "sweep".into()),
            ("d", fmt_float(cfg.d)),
            ("points", sweep.entries.len().to_string()),
            ("failures", failures.to_string()),
            ("lambda_star_min", fmt_float(lo)),
            ("lambda_star_max", fmt_float(hi)),
            ("monotone", monotone.to_string()),
        ],
        code: if failures == 0 { EXIT_OK } else { EXIT_NUMERICAL },
    })
}

fn cmd_evolve(cfg: &RunConfig, grid: Grid) -> Result<Outcome> {
    let p = cfg.problem()?;
    let mut params = EvolveParams::new(p, cfg.alpha);
    params.dt0 = cfg.dt0;
    params.t_end = cfg.t_end;
    params.steady_tol = cfg.steady_tol;
    if let Some(th) = cfg.blowup_threshold {
        params.blowup_threshold = th;
    }
    let r = evolve(&params, grid)?;
    let outcome = match r.outcome {
        EvolveOutcome::SteadyState => "steady",
        EvolveOutcome::BlowUp => "blowup",
        EvolveOutcome::TimeLimitReached => "time-limit",
    };
    write_outputs(cfg, &trace_csv(&r.trace), || {
        let u: Vec<(f64, f64)> = r.trace.iter().map(|s| (s.t, s.max_u)).collect();
        let v: Vec<(f64, f64)> = r.trace.iter().map(|s| (s.t, s.max_v)).collect();
        Ok(LinePlot::new(
            &format!("Center temperatures, λ={} ν={}", fmt_float(p.lambda), fmt_float(p.nu)),
            "t",
            "U(0,t), V(0,t)",
        )
        .with(Series::solid("U", u))
        .with(Series::dashed("V", v)))
    })?;
    if let Some(path) = &cfg.snapshot {
        write_file(path, &state_csv(&r.state, Some(r.t_final)))
            .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))?;
    }
    let mut summary = vec![
        ("command", "evolve".into()),
        ("outcome", outcome.into()),
        ("lambda", fmt_float(p.lambda)),
        ("nu", fmt_float(p.nu)),
        ("d", fmt_float(p.d)),
        ("alpha", fmt_float(cfg.alpha)),
        ("t_final", fmt_float(r.t_final)),
        ("max_u", fmt_float(r.state.u.max())),
        ("max_v", fmt_float(r.state.v.max())),
        ("steps", r.steps.to_string()),
    ];
    if r.outcome != EvolveOutcome::BlowUp {
        summary.push(("energy", fmt_float(energy(&r.state, &p)?)));
    }
    Ok(Outcome {
        summary,
        code: if r.outcome == EvolveOutcome::BlowUp { EXIT_NO_SOLUTION } else { EXIT_OK },
    })
}

fn cmd_eigen(cfg: &RunConfig, grid: Grid) -> Result<Outcome> {
    let (mu1, phi) = principal_eigenpair(grid)?;
    let mut summary = vec![("command", "eigen".to_string()), ("mu1", fmt_float(mu1))];
    let mut code = EXIT_OK;
    if cfg.lambda.is_some() {
        let p = cfg.problem()?;
        let s = monotone_iterate(&p, grid, &cfg.monotone())?;
        if s.converged() {
            summary.push(("mu_lin", fmt_float(linearized_principal_eigenvalue(&p, &s.state)?)));
        } else {
            summary.push(("status", "diverged".into()));
            code = EXIT_NO_SOLUTION;
        }
    }
    write_outputs(cfg, &eigen_csv(&phi), || {
        let pts = grid.nodes().into_iter().zip(phi.values().iter().copied()).collect();
        Ok(LinePlot::new(&format!("Principal eigenfunction, μ1={}", fmt_float(mu1)), "x", "φ1")
            .with(Series::solid("φ1", pts)))
    })?;
    Ok(Outcome { summary, code })
}

fn cmd_classical(cfg: &RunConfig, grid: Grid) -> Result<Outcome> {
    let r = classical_lambda_star_scaled(cfg.reaction, 1.0, grid, &cfg.critical())?;
    let csv = format!(
        "lambda_star,bracket_width\n{},{}\n",
        fmt_float(r.lambda_star),
        fmt_float(r.bracket_width)
    );
    write_outputs(cfg, &csv, || {
        let s = crate::continuation::classical_iterate(cfg.reaction, r.lower, grid, &cfg.monotone(), None)?;
        let pts = grid.nodes().into_iter().zip(s.state.u.values().iter().copied()).collect();
        Ok(LinePlot::new(
            &format!("Classical solution just below Λ*={}", fmt_float(r.lambda_star)),
            "x",
            "w",
        )
        .with(Series::solid("w", pts)))
    })?;
    Ok(Outcome {
        summary: vec![
            ("command", "classical".into()),
            ("g", cfg.reaction.to_string()),
            ("lambda_star", fmt_float(r.lambda_star)),
            ("bracket_width", fmt_float(r.bracket_width)),
            ("evaluations", r.evaluations.to_string()),
        ],
        code: EXIT_OK,
    })
}
