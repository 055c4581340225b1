//! Orlicz functions, their generalized inverses and the decay functions
//! built from them.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Serializable description of an Orlicz function, as accepted on the
/// command line: `{"family":"power","p":2}`, `{"family":"exp","a":1}` or
/// `{"family":"table","points":[[x, y], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiSpec {
    Power { p: f64 },
    #[serde(alias = "exp-type", alias = "exp_type")]
    Exp { a: f64 },
    Table { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone)]
enum Family {
    Power(f64),
    Exp(f64),
    Table(LogLogTable),
}

/// Piecewise power law through the knots; below the first and above the
/// last knot the adjacent slope is continued.
#[derive(Debug, Clone)]
struct LogLogTable {
    lx: Vec<f64>,
    ly: Vec<f64>,
    slopes: Vec<f64>,
}

impl LogLogTable {
    fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("Orlicz table needs at least two (x, psi) pairs"));
        }
        let mut lx = Vec::with_capacity(points.len());
        let mut ly = Vec::with_capacity(points.len());
        for &(x, y) in points {
            if !(x.is_finite() && y.is_finite() && x > 0.0 && y > 0.0) {
                return Err(invalid(format!(
                    "Orlicz table entries must be positive and finite, got ({x}, {y})"
                )));
            }
            lx.push(x.ln());
            ly.push(y.ln());
        }
        let mut slopes = Vec::with_capacity(points.len() - 1);
        for i in 1..lx.len() {
            if lx[i] <= lx[i - 1] {
                return Err(invalid("Orlicz table abscissae must be strictly increasing"));
            }
            if ly[i] <= ly[i - 1] {
                return Err(invalid(
                    "Orlicz table values must be strictly increasing (flats are not supported)",
                ));
            }
            let s = (ly[i] - ly[i - 1]) / (lx[i] - lx[i - 1]);
            if s < 1.0 - 1e-12 {
                return Err(invalid(format!(
                    "Orlicz table log-log slope {s} is below 1; the interpolant would not be convex"
                )));
            }
            if let Some(&prev) = slopes.last() {
                if s < prev - 1e-12 {
                    return Err(invalid(
                        "Orlicz table log-log slopes must be nondecreasing for convexity",
                    ));
                }
            }
            slopes.push(s);
        }
        Ok(LogLogTable { lx, ly, slopes })
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x == f64::INFINITY {
            return f64::INFINITY;
        }
        let l = x.ln();
        let k = self.lx.partition_point(|&v| v <= l);
        let seg = k.saturating_sub(1).min(self.slopes.len() - 1);
        (self.ly[seg] + self.slopes[seg] * (l - self.lx[seg])).exp()
    }
}

/// A convex nondecreasing gauge with `Psi(0) = 0` and `Psi(x) -> infinity`.
#[derive(Debug, Clone)]
pub struct OrliczFunction {
    family: Family,
    spec: PsiSpec,
}

/// Largest abscissa probed when bracketing the inverse.
const OVERFLOW_PROBE: f64 = 1e300;

impl OrliczFunction {
    pub fn power(p: f64) -> Result<Self> {
        Self::from_spec(&PsiSpec::Power { p })
    }

    pub fn exp_type(a: f64) -> Result<Self> {
        Self::from_spec(&PsiSpec::Exp { a })
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        Self::from_spec(&PsiSpec::Table { points })
    }

    /// Parses a two-column `x,psi` CSV (header lines and `#` comments are
    /// skipped) into a log-log interpolated table.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(Error::Config(format!(
                        "line {}: expected two comma-separated columns",
                        lineno + 1
                    )))
                }
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => points.push((x, y)),
                _ if points.is_empty() => continue,
                _ => {
                    return Err(Error::Config(format!(
                        "line {}: could not parse numbers",
                        lineno + 1
                    )))
                }
            }
        }
        Self::table(points)
    }

    pub fn from_spec(spec: &PsiSpec) -> Result<Self> {
        let family = match spec {
            PsiSpec::Power { p } => {
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(invalid(format!("power family needs p >= 1, got {p}")));
                }
                Family::Power(*p)
            }
            PsiSpec::Exp { a } => {
                if !(a.is_finite() && *a >= 1.0) {
                    return Err(invalid(format!("exponential family needs a >= 1, got {a}")));
                }
                Family::Exp(*a)
            }
            PsiSpec::Table { points } => Family::Table(LogLogTable::new(points)?),
        };
        Ok(OrliczFunction {
            family,
            spec: spec.clone(),
        })
    }

    pub fn spec(&self) -> &PsiSpec {
        &self.spec
    }

    /// Evaluates `Psi(x)`; negative arguments are treated as 0.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 || x.is_nan() {
            return 0.0;
        }
        match &self.family {
            Family::Power(p) => x.powf(*p),
            Family::Exp(a) => x.powf(*a).exp_m1(),
            Family::Table(t) => t.eval(x),
        }
    }

    /// Left-continuous generalized inverse `inf { x : Psi(x) >= y }`,
    /// located by doubling/halving from 1 and bisecting to adjacent floats.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if y.is_nan() || y < 0.0 {
            return Err(invalid(format!("Psi^-1 needs y >= 0, got {y}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if y == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        let (mut lo, mut hi) = (1.0f64, 1.0f64);
        if self.eval(hi) < y {
            while self.eval(hi) < y {
                lo = hi;
                hi *= 2.0;
                if hi > OVERFLOW_PROBE {
                    return Err(Error::NoBracket { y });
                }
            }
        } else {
            lo = 0.5;
            while self.eval(lo) >= y {
                hi = lo;
                lo *= 0.5;
                if lo == 0.0 {
                    return Ok(hi);
                }
            }
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) >= y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let resid = (self.eval(hi) - y).abs();
        if resid > 1e-10 * y.max(1.0) {
            return Err(Error::NotConverged(format!(
                "Psi^-1({y}) bisection residual {resid:e} exceeds tolerance"
            )));
        }
        Ok(hi)
    }

    /// Short identifier for reports, e.g. `power(2)`.
    pub fn id(&self) -> String {
        match &self.family {
            Family::Power(p) => format!("power({p})"),
            Family::Exp(a) => format!("exp({a})"),
            Family::Table(t) => format!("table({} knots)", t.lx.len()),
        }
    }

    /// Sampled checks of the defining properties: `Psi(0) = 0`,
    /// monotonicity, midpoint convexity and growth beyond `10^12`.
    pub fn check_invariants(&self) -> Result<()> {
        if self.eval(0.0) != 0.0 {
            return Err(invalid("Psi(0) must vanish"));
        }
        let grid: Vec<f64> = (-40..=40).map(|k| 2f64.powf(k as f64 / 4.0)).collect();
        for w in grid.windows(2) {
            let (a, b) = (self.eval(w[0]), self.eval(w[1]));
            if a > b {
                return Err(invalid(format!("Psi decreases between {} and {}", w[0], w[1])));
            }
        }
        for i in 0..grid.len() {
            for j in (i + 1)..grid.len() {
                let (x, y) = (grid[i], grid[j]);
                let m = self.eval(0.5 * (x + y));
                let avg = 0.5 * (self.eval(x) + self.eval(y));
                if avg.is_finite() && m > avg * (1.0 + 1e-12) {
                    return Err(invalid(format!("midpoint convexity fails at ({x}, {y})")));
                }
            }
        }
        let mut probe = 1.0;
        while self.eval(probe) <= 1e12 {
            probe *= 2.0;
            if probe > OVERFLOW_PROBE {
                return Err(invalid("Psi does not grow past 1e12 below the overflow probe"));
            }
        }
        Ok(())
    }
}

type UserDelta = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum DecaySource {
    FromPsi(OrliczFunction),
    User {
        f: UserDelta,
        monotone: bool,
        label: String,
    },
}

/// A decay rate `delta: (0,1) -> (0, 1/2]`.
#[derive(Clone)]
pub struct DecayFunction {
    source: DecaySource,
}

impl fmt::Debug for DecayFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DecayFunction({})", self.id())
    }
}

/// `delta(t) = min(1/2, 1/Psi(sqrt(Psi^-1(1/t))))`.
pub fn delta_from_psi(psi: &OrliczFunction) -> DecayFunction {
    DecayFunction {
        source: DecaySource::FromPsi(psi.clone()),
    }
}

impl DecayFunction {
    /// Wraps a user rate. `monotone` declares that `delta` is nondecreasing
    /// in `t`; it is spot-checked by [`DecayFunction::check_monotone_near_zero`].
    pub fn user<F>(label: impl Into<String>, monotone: bool, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        DecayFunction {
            source: DecaySource::User {
                f: Arc::new(f),
                monotone,
                label: label.into(),
            },
        }
    }

    pub fn psi(&self) -> Option<&OrliczFunction> {
        match &self.source {
            DecaySource::FromPsi(psi) => Some(psi),
            DecaySource::User { .. } => None,
        }
    }

    pub fn id(&self) -> String {
        match &self.source {
            DecaySource::FromPsi(psi) => format!("from-psi:{}", psi.id()),
            DecaySource::User { label, .. } => format!("user:{label}"),
        }
    }

    /// Whether `delta` is known to be nondecreasing in `t`. Rates built from
    /// an Orlicz function always are, since every step of the formula is
    /// monotone.
    pub fn is_monotone(&self) -> bool {
        match &self.source {
            DecaySource::FromPsi(_) => true,
            DecaySource::User { monotone, .. } => *monotone,
        }
    }

    fn check_t(t: f64) -> Result<()> {
        if t > 0.0 && t < 1.0 {
            Ok(())
        } else {
            Err(invalid(format!("decay function argument must lie in (0,1), got {t}")))
        }
    }

    /// The rate before the clamp to `1/2`.
    pub fn raw(&self, t: f64) -> Result<f64> {
        Self::check_t(t)?;
        match &self.source {
            DecaySource::FromPsi(psi) => {
                let x = psi.inverse(1.0 / t)?;
                Ok(1.0 / psi.eval(x.sqrt()))
            }
            DecaySource::User { f, .. } => {
                let v = f(t);
                if v.is_nan() || v <= 0.0 {
                    return Err(invalid(format!("user decay function returned {v} at t = {t}")));
                }
                Ok(v)
            }
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.raw(t)?.min(0.5))
    }

    /// `Psi^-1(1/delta(t)) / Psi^-1(1/t)` computed from the pre-clamp rate;
    /// the construction makes it equal `1/sqrt(Psi^-1(1/t))`.
    pub fn corollary_ratio(&self, t: f64) -> Result<f64> {
        let psi = self
            .psi()
            .ok_or_else(|| invalid("corollary ratio needs a rate built from an Orlicz function"))?;
        let d = self.raw(t)?;
        Ok(psi.inverse(1.0 / d)? / psi.inverse(1.0 / t)?)
    }

    /// Checks `delta(t) -> 0` on the probes `t = 2^-k` and that the sampled
    /// values are nonincreasing as `t` decreases.
    pub fn check_monotone_near_zero(&self) -> Result<()> {
        let mut prev = f64::INFINITY;
        let mut mid = f64::NAN;
        for k in 1..=60 {
            let t = 2f64.powi(-k);
            let v = self.eval(t)?;
            if k == 30 {
                mid = v;
            }
            if v > prev * (1.0 + 1e-12) {
                return Err(invalid(format!(
                    "decay function increases as t decreases near t = {t}"
                )));
            }
            prev = v;
        }
        // a rate tending to 0 must keep shrinking over the deepest probes
        if !(prev < 0.9 * mid) {
            return Err(invalid(format!(
                "decay function does not tend to 0: delta(2^-30) = {mid}, delta(2^-60) = {prev}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn families_evaluate() {
        let sq = OrliczFunction::power(2.0).unwrap();
        assert_eq!(sq.eval(3.0), 9.0);
        assert_eq!(sq.eval(0.0), 0.0);
        let e = OrliczFunction::exp_type(1.0).unwrap();
        assert!((e.eval(1.0) - (1f64.exp() - 1.0)).abs() < 1e-15);
        assert!((e.eval(1.0) - 1.718281828).abs() < 1e-9);
    }

    #[test]
    fn rejects_subconvex_parameters() {
        assert!(OrliczFunction::power(0.5).is_err());
        assert!(OrliczFunction::exp_type(0.9).is_err());
        assert!(OrliczFunction::table(vec![(1.0, 1.0), (2.0, 1.0)]).is_err());
        assert!(OrliczFunction::table(vec![(1.0, 1.0), (2.0, 1.5)]).is_err());
        assert!(OrliczFunction::table(vec![(1.0, 1.0), (2.0, 8.0), (4.0, 20.0)]).is_err());
    }

    #[test]
    fn inverse_examples() {
        let sq = OrliczFunction::power(2.0).unwrap();
        assert_eq!(sq.inverse(16.0).unwrap(), 4.0);
        assert_eq!(sq.inverse(0.0).unwrap(), 0.0);
        assert_eq!(sq.inverse(f64::INFINITY).unwrap(), f64::INFINITY);
        let e = OrliczFunction::exp_type(1.0).unwrap();
        assert!(close(e.inverse(1.0).unwrap(), 2f64.ln(), 1e-15));
        assert!(sq.inverse(-1.0).is_err());
    }

    #[test]
    fn table_interpolates_power_law() {
        let t = OrliczFunction::table(vec![(1.0, 1.0), (2.0, 4.0), (4.0, 16.0)]).unwrap();
        assert!(close(t.eval(3.0), 9.0, 1e-13));
        assert!(close(t.eval(0.5), 0.25, 1e-13));
        assert!(close(t.eval(10.0), 100.0, 1e-13));
        assert!(t.check_invariants().is_ok());
        let csv = "x,psi\n1,1\n2,4\n# comment\n4,16\n";
        let c = OrliczFunction::from_csv(csv).unwrap();
        assert!(close(c.eval(3.0), 9.0, 1e-13));
    }

    #[test]
    fn invariants_hold_for_families() {
        for psi in [
            OrliczFunction::power(1.0).unwrap(),
            OrliczFunction::power(3.5).unwrap(),
            OrliczFunction::exp_type(1.0).unwrap(),
            OrliczFunction::exp_type(2.0).unwrap(),
        ] {
            psi.check_invariants().unwrap();
        }
    }

    #[test]
    fn delta_examples() {
        let d = delta_from_psi(&OrliczFunction::power(2.0).unwrap());
        assert!(close(d.eval(1.0 / 16.0).unwrap(), 0.25, 1e-15));
        assert_eq!(d.eval(0.9).unwrap(), 0.5);
        assert!(close(d.eval(1e-8).unwrap(), 1e-4, 1e-12));
        assert!(d.eval(0.0).is_err());
        assert!(d.eval(1.0).is_err());
    }

    #[test]
    fn delta_for_square_is_sqrt() {
        let d = delta_from_psi(&OrliczFunction::power(2.0).unwrap());
        for k in 1..200 {
            let t = 0.999 * (k as f64 / 200.0).powi(6);
            let v = d.eval(t).unwrap();
            assert!((v - t.sqrt().min(0.5)).abs() <= 1e-12, "t={t}");
        }
    }

    #[test]
    fn corollary_ratio_matches_formula() {
        for psi in [
            OrliczFunction::power(2.0).unwrap(),
            OrliczFunction::exp_type(1.0).unwrap(),
        ] {
            let d = delta_from_psi(&psi);
            for k in 2..40 {
                let t = 2f64.powi(-k);
                let r = d.corollary_ratio(t).unwrap();
                let expect = 1.0 / psi.inverse(1.0 / t).unwrap().sqrt();
                assert!(close(r, expect, 1e-9), "{} t={t}: {r} vs {expect}", psi.id());
            }
            d.check_monotone_near_zero().unwrap();
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let s: PsiSpec = serde_json::from_str(r#"{"family":"power","p":2}"#).unwrap();
        assert_eq!(s, PsiSpec::Power { p: 2.0 });
        let s: PsiSpec = serde_json::from_str(r#"{"family":"exp","a":1}"#).unwrap();
        assert_eq!(s, PsiSpec::Exp { a: 1.0 });
        assert!(serde_json::from_str::<PsiSpec>(r#"{"family":"power","p":2,"q":1}"#).is_err());
    }
}
