//! Convex nondecreasing reaction terms `g` with `g(0) > 0` and
//! `∫^∞ ds / g(s) < ∞`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reaction {
    /// `g(s) = e^s` (Frank-Kamenetskii kinetics).
    Exponential,
    /// `g(s) = (1 + s)^p` with `p > 1`.
    PowerPlusOne(f64),
}

impl Reaction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "power reaction needs a finite exponent p > 1, got {p}"
            )));
        }
        Ok(Reaction::PowerPlusOne(p))
    }

    pub fn g(&self, s: f64) -> Result<f64> {
        check_domain(s)?;
        Ok(self.g_unchecked(s))
    }

    pub fn g_prime(&self, s: f64) -> Result<f64> {
        check_domain(s)?;
        Ok(match *self {
            Reaction::Exponential => s.exp(),
            Reaction::PowerPlusOne(p) => p * (1.0 + s).powf(p - 1.0),
        })
    }

    /// `Φ(s) = -∫_0^s g`.
    pub fn phi(&self, s: f64) -> Result<f64> {
        check_domain(s)?;
        Ok(match *self {
            Reaction::Exponential => -s.exp_m1(),
            Reaction::PowerPlusOne(p) => -((1.0 + s).powf(p + 1.0) - 1.0) / (p + 1.0),
        })
    }

    pub(crate) fn g_unchecked(&self, s: f64) -> f64 {
        match *self {
            Reaction::Exponential => s.exp(),
            Reaction::PowerPlusOne(p) => (1.0 + s).powf(p),
        }
    }

    pub(crate) fn g_prime_unchecked(&self, s: f64) -> f64 {
        match *self {
            Reaction::Exponential => s.exp(),
            Reaction::PowerPlusOne(p) => p * (1.0 + s).powf(p - 1.0),
        }
    }

    /// Evaluates `g` nodewise into `out`.
    pub(crate) fn g_into(&self, s: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, &x) in out.iter_mut().zip(s) {
            *o = self.g(x)?;
        }
        Ok(())
    }

    /// Largest `η` with `g(s) >= η s` for all `s >= 0`.
    pub fn eta(&self) -> f64 {
        match *self {
            Reaction::Exponential => std::f64::consts::E,
            Reaction::PowerPlusOne(p) => {
                // g(s)/s in log form, minimized over t = ln s; unimodal in t.
                let log_ratio = |t: f64| p * t.exp().ln_1p() - t;
                golden_section_min(log_ratio, -30.0, 60.0, 1e-10).exp()
            }
        }
    }

    /// Amplitude at which the parabolic solver flags blow-up by default.
    ///
    /// `e^s` reaches the explicit-step limit of `dt_min = 1e-12` near
    /// `s ≈ 28`, and overflows past 709, so its threshold sits well below the
    /// generic `1e3`.
    pub fn default_blowup_threshold(&self) -> f64 {
        match self {
            Reaction::Exponential => 20.0,
            Reaction::PowerPlusOne(_) => 1e3,
        }
    }
}

fn check_domain(s: f64) -> Result<()> {
    if s < 0.0 || s.is_nan() {
        Err(Error::Domain(s))
    } else {
        Ok(())
    }
}

/// Minimum value of a unimodal `f` on `[a, b]`.
fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    f(0.5 * (a + b))
}

impl fmt::Display for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reaction::Exponential => write!(f, "exp"),
            Reaction::PowerPlusOne(p) => write!(f, "pow:{p}"),
        }
    }
}

impl FromStr for Reaction {
    type Err = Error;

    /// Parses `exp` or `pow:<p>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "exp" {
            return Ok(Reaction::Exponential);
        }
        if let Some(p) = s.strip_prefix("pow:") {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad exponent in reaction '{s}'")))?;
            return Reaction::power(p);
        }
        Err(Error::InvalidArgument(format!(
            "unknown reaction '{s}', expected 'exp' or 'pow:<p>'"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exponential_values() {
        let r = Reaction::Exponential;
        assert_eq!(r.g(0.0).unwrap(), 1.0);
        assert!((r.g(1.0).unwrap() - 2.718281828459045).abs() < 1e-15);
        assert_eq!(r.g_prime(0.0).unwrap(), 1.0);
        assert!((r.eta() - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn power_values() {
        let r = Reaction::power(2.0).unwrap();
        assert_eq!(r.g(3.0).unwrap(), 16.0);
        assert_eq!(r.g_prime(0.0).unwrap(), 2.0);
        assert!((r.eta() - 4.0).abs() < 1e-8);
    }

    #[test]
    fn eta_matches_calculus_minimum() {
        // min of (1+s)^p / s sits at s = 1/(p-1).
        for p in [1.2_f64, 1.5, 2.0, 3.0, 4.5] {
            let s = 1.0 / (p - 1.0);
            let exact = (1.0 + s).powf(p) / s;
            let eta = Reaction::power(p).unwrap().eta();
            assert!((eta - exact).abs() < 1e-8 * exact, "p={p}: {eta} vs {exact}");
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let (s, eps) = (0.7, 1e-5);
        for r in [Reaction::Exponential, Reaction::power(2.5).unwrap()] {
            let fd = (r.g(s + eps).unwrap() - r.g(s - eps).unwrap()) / (2.0 * eps);
            assert!((r.g_prime(s).unwrap() - fd).abs() <= 1e-6);
        }
    }

    #[test]
    fn negative_argument_rejected() {
        let r = Reaction::Exponential;
        assert!(matches!(r.g(-1e-3), Err(Error::Domain(_))));
        assert!(r.g_prime(-1.0).is_err());
        assert!(r.phi(-1.0).is_err());
    }

    #[test]
    fn parse_selector() {
        assert_eq!("exp".parse::<Reaction>().unwrap(), Reaction::Exponential);
        assert_eq!(
            "pow:2.5".parse::<Reaction>().unwrap(),
            Reaction::PowerPlusOne(2.5)
        );
        assert!("pow:1".parse::<Reaction>().is_err());
        assert!("pow:x".parse::<Reaction>().is_err());
        assert!("arrhenius".parse::<Reaction>().is_err());
        let r = Reaction::power(3.0).unwrap();
        assert_eq!(r.to_string().parse::<Reaction>().unwrap(), r);
    }

    #[test]
    fn linear_minorant_on_dense_samples() {
        for r in [Reaction::Exponential, Reaction::power(2.0).unwrap(), Reaction::power(1.3).unwrap()] {
            let eta = r.eta();
            for k in 0..10_000 {
                let s = 50.0 * k as f64 / 9_999.0;
                assert!(r.g(s).unwrap() >= eta * s * (1.0 - 1e-12), "{r} at {s}");
            }
        }
    }

    proptest! {
        #[test]
        fn convex_nondecreasing(s in 0.0..30.0f64, t in 0.0..30.0f64, p in 1.01..5.0f64) {
            for r in [Reaction::Exponential, Reaction::PowerPlusOne(p)] {
                let (lo, hi) = if s < t { (s, t) } else { (t, s) };
                let mid = r.g(0.5 * (lo + hi)).unwrap();
                let chord = 0.5 * (r.g(lo).unwrap() + r.g(hi).unwrap());
                prop_assert!(mid <= chord * (1.0 + 1e-12) + 1e-12);
                prop_assert!(r.g_prime(lo).unwrap() >= 0.0);
                prop_assert!(r.g(lo).unwrap() <= r.g(hi).unwrap());
                prop_assert!(r.phi(hi).unwrap() <= r.phi(lo).unwrap());
            }
        }
    }

    #[test]
    fn phi_vanishes_at_zero() {
        assert_eq!(Reaction::Exponential.phi(0.0).unwrap(), 0.0);
        assert_eq!(Reaction::PowerPlusOne(2.0).phi(0.0).unwrap(), 0.0);
        // Φ(1) for (1+s)^2 is -(8 - 1)/3.
        assert!((Reaction::PowerPlusOne(2.0).phi(1.0).unwrap() + 7.0 / 3.0).abs() < 1e-14);
    }
}
