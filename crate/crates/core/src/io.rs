//! Text formats: state, sweep and trace CSV files, and the flat
//! `key=value` config file.
//!
//! Floats are written with 12 significant digits in `%g` style, `.` decimal
//! separator, LF line endings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::continuation::SweepResult;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::parabolic::TraceSample;
use crate::stationary::TwoPhaseState;

const SIG_DIGITS: i32 = 12;

/// Formats `x` like C's `%.12g`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (SIG_DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIG_DIGITS).contains(&exp) {
        let decimals = (SIG_DIGITS - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x,u,v` rows for each interior node. `time` adds a leading `# t=...`
/// comment line (snapshot files).
pub fn state_csv(s: &TwoPhaseState, time: Option<f64>) -> String {
    let grid = s.grid();
    let mut out = String::new();
    if let Some(t) = time {
        let _ = writeln!(out, "# t={}", fmt_float(t));
    }
    out.push_str("x,u,v\n");
    for i in 0..grid.n() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_float(grid.node(i)),
            fmt_float(s.u.values()[i]),
            fmt_float(s.v.values()[i])
        );
    }
    out
}

/// Parses a state CSV; returns the state and the snapshot time if present.
pub fn parse_state_csv(text: &str) -> Result<(TwoPhaseState, Option<f64>)> {
    let mut time = None;
    let mut header_seen = false;
    let mut xs = Vec::new();
    let mut us = Vec::new();
    let mut vs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(t) = comment.trim().strip_prefix("t=") {
                time = Some(parse_f64(t, lineno)?);
            }
            continue;
        }
        if !header_seen {
            if line != "x,u,v" {
                return Err(Error::Parse(format!("expected header 'x,u,v', found '{line}'")));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected 3 columns", lineno + 1)));
        }
        xs.push(parse_f64(cols[0], lineno)?);
        us.push(parse_f64(cols[1], lineno)?);
        vs.push(parse_f64(cols[2], lineno)?);
    }
    if !header_seen {
        return Err(Error::Parse("missing 'x,u,v' header".into()));
    }
    let grid = Grid::new(xs.len())?;
    for (i, &x) in xs.iter().enumerate() {
        if (x - grid.node(i)).abs() > 1e-9 {
            return Err(Error::Parse(format!(
                "row {}: x = {x} is not node {} of a uniform {}-node grid",
                i + 1,
                grid.node(i),
                grid.n()
            )));
        }
    }
    let state = TwoPhaseState::new(Field::from_values(grid, us)?, Field::from_values(grid, vs)?)?;
    Ok((state, time))
}

fn parse_f64(s: &str, lineno: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {}: '{s}' is not a number", lineno + 1)))
}

/// `nu,lambda_star,bracket_width`; failed entries are written as `nan`.
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("nu,lambda_star,bracket_width\n");
    for e in &sweep.entries {
        let (l, w) = match &e.result {
            Ok(r) => (r.lambda_star, r.bracket_width),
            Err(_) => (f64::NAN, f64::NAN),
        };
        let _ = writeln!(out, "{},{},{}", fmt_float(e.nu), fmt_float(l), fmt_float(w));
    }
    out
}

/// `t,max_u,max_v,energy,dt`.
pub fn trace_csv(trace: &[TraceSample]) -> String {
    let mut out = String::from("t,max_u,max_v,energy,dt\n");
    for s in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_float(s.t),
            fmt_float(s.max_u),
            fmt_float(s.max_v),
            fmt_float(s.energy),
            fmt_float(s.dt)
        );
    }
    out
}

/// `x,phi1`.
pub fn eigen_csv(phi: &Field) -> String {
    let grid = phi.grid();
    let mut out = String::from("x,phi1\n");
    for i in 0..grid.n() {
        let _ = writeln!(out, "{},{}", fmt_float(grid.node(i)), fmt_float(phi.values()[i]));
    }
    out
}

/// Parses a flat `key=value` file. Blank lines and `#` comments are skipped;
/// keys are normalized to use `-` in place of `_`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse(format!(
                "config line {}: expected key=value, found '{line}'",
                lineno + 1
            )));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(Error::Parse(format!("config line {}: empty key", lineno + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)?;
    Ok(())
}
