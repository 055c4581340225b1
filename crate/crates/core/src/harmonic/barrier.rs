//! Barriers in the region `R`, the truncated domains `Omega_n`, hole
//! calibration and the resulting bound on the Carleson function.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::domain::{far_cap, DomainKind, Piece, PlanarDomain, Shape, DEFAULT_Y_CAP};
use super::walk::{derive_seed, exit_sample, WalkConfig};
use crate::error::{invalid, Error, Result};
use crate::orlicz::OrliczFunction;
use crate::stats::linear_fit;

const FOUR_PI: f64 = 4.0 * PI;

/// Slope magnitude of the slanted barrier segments.
pub const SLANT_SLOPE: f64 = 2.0;

/// Fraction of the largest admissible half-width used as the initial hole.
pub const INITIAL_HOLE_FRACTION: f64 = 0.99;

/// `b_n = 1/(4 n pi)`, with `b_0 = infinity`.
pub fn b(n: u32) -> f64 {
    if n == 0 {
        f64::INFINITY
    } else {
        1.0 / (FOUR_PI * n as f64)
    }
}

/// Intersection of the middle hyperbola `y = 1/x + 2 pi` with altitude
/// `4 n pi`.
pub fn m_n(n: u32) -> Complex64 {
    let nf = n as f64;
    Complex64::new(1.0 / (FOUR_PI * nf - 2.0 * PI), FOUR_PI * nf)
}

/// Distance from `M_n` to the nearer end `b_n` of the altitude segment.
pub fn delta_max(n: u32) -> f64 {
    let nf = n as f64;
    1.0 / (FOUR_PI * nf * (2.0 * nf - 1.0))
}

/// The pair of barriers `P_n^+` (against `y = 1/x`) and `P_n^-` (against
/// `y = 1/x + 4 pi`) at altitude `4 n pi`, separated by the hole
/// `[M_n - delta, M_n + delta]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Barrier {
    pub n: u32,
    pub delta: f64,
    pub b_n: f64,
    pub m: Complex64,
    pub foot_plus: f64,
    pub foot_minus: f64,
    pub c_plus: Complex64,
    pub c_minus: Complex64,
}

impl Barrier {
    pub fn new(n: u32, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("barrier index starts at 1"));
        }
        let dmax = delta_max(n);
        if !(delta > 0.0 && delta < dmax) {
            return Err(invalid(format!(
                "hole half-width {delta} outside (0, {dmax}) for n = {n}"
            )));
        }
        let m = m_n(n);
        let y0 = FOUR_PI * n as f64;
        let foot_plus = m.re - delta;
        let foot_minus = m.re + delta;
        // slope -2 from the foot meets y = 1/x at the small root of
        // 2x^2 - (y0 + 2 f) x + 1 = 0
        let s = y0 + SLANT_SLOPE * foot_plus;
        let disc = s * s - 4.0 * SLANT_SLOPE;
        if disc <= 0.0 {
            return Err(invalid(format!("slant of P_{n}^+ misses the hyperbola")));
        }
        let xp = 2.0 / (s + disc.sqrt());
        let c_plus = Complex64::new(xp, 1.0 / xp);
        // slope +2 meets y = 1/x + 4 pi at the positive root of
        // 2x^2 + (y0 - 2 f - 4 pi) x - 1 = 0
        let bq = y0 - SLANT_SLOPE * foot_minus - FOUR_PI;
        let xm = (-bq + (bq * bq + 4.0 * SLANT_SLOPE).sqrt()) / (2.0 * SLANT_SLOPE);
        let c_minus = Complex64::new(xm, 1.0 / xm + FOUR_PI);
        let barrier = Barrier {
            n,
            delta,
            b_n: b(n),
            m,
            foot_plus,
            foot_minus,
            c_plus,
            c_minus,
        };
        barrier.check()?;
        Ok(barrier)
    }

    fn check(&self) -> Result<()> {
        let top = FOUR_PI * (self.n as f64 + 1.0);
        for (name, c) in [("+", self.c_plus), ("-", self.c_minus)] {
            if !(top - c.im > 2.0 * PI) {
                return Err(Error::InvalidParameter(format!(
                    "slant tip c_{}^{name} too high: Im = {}",
                    self.n, c.im
                )));
            }
        }
        if !(self.foot_plus > self.b_n && self.foot_minus < b(self.n - 1)) {
            return Err(invalid("hole leaves the altitude segment"));
        }
        Ok(())
    }

    fn y0(&self) -> f64 {
        FOUR_PI * self.n as f64
    }

    /// Closed barrier sets, intersected with `R` by the caller.
    pub fn contains(&self, z: Complex64) -> bool {
        let y0 = self.y0();
        z.im >= y0
            && (z.im <= y0 + SLANT_SLOPE * (self.foot_plus - z.re)
                || z.im <= y0 + SLANT_SLOPE * (z.re - self.foot_minus))
    }

    fn pieces(&self) -> Vec<Piece> {
        let y0 = self.y0();
        let c = |x: f64| Complex64::new(x, y0);
        let plus = format!("P{}+", self.n);
        let minus = format!("P{}-", self.n);
        let mut out = vec![
            Piece::new(Shape::Segment { a: c(self.b_n), b: c(self.foot_plus) }, plus.clone()),
            Piece::new(Shape::Segment { a: c(self.foot_plus), b: self.c_plus }, plus),
            Piece::new(Shape::Segment { a: c(self.foot_minus), b: self.c_minus }, minus.clone()),
        ];
        let far = b(self.n - 1);
        out.push(if far.is_finite() {
            Piece::new(Shape::Segment { a: c(self.foot_minus), b: c(far) }, minus)
        } else {
            Piece::new(
                Shape::Ray {
                    origin: c(self.foot_minus),
                    dir: Complex64::new(1.0, 0.0),
                },
                minus,
            )
        });
        out
    }
}

fn hyperbola(c: f64, xa: f64, xb: f64, label: &str) -> Piece {
    Piece::new(Shape::Hyperbola { c, xa, xb }, label)
}

fn check_chain(barriers: &[Barrier]) -> Result<()> {
    for (k, bar) in barriers.iter().enumerate() {
        if bar.n as usize != k + 1 {
            return Err(invalid("barriers must be indexed 1, 2, ... in order"));
        }
    }
    Ok(())
}

/// `R` minus the barriers `P_j`, `j < n`, cut at altitude `4 n pi`. The top
/// segment is labelled `hole` on `[M_n - delta, M_n + delta]` and `top`
/// elsewhere.
pub fn omega_n(barriers: &[Barrier], n: u32, delta: f64) -> Result<PlanarDomain> {
    if n == 0 || barriers.len() + 1 < n as usize {
        return Err(invalid(format!("Omega_{n} needs barriers 1..{}", n.saturating_sub(1))));
    }
    let used = &barriers[..n as usize - 1];
    check_chain(used)?;
    if !(delta > 0.0 && delta < delta_max(n)) {
        return Err(invalid(format!("hole half-width {delta} invalid for n = {n}")));
    }
    let mut pieces = vec![hyperbola(0.0, b(1), f64::INFINITY, "L0")];
    for bar in used {
        let j = bar.n;
        pieces.push(hyperbola(0.0, b(j + 1), bar.c_plus.re, "L0"));
        pieces.push(hyperbola(FOUR_PI, b(j), bar.c_minus.re, "L1"));
        pieces.extend(bar.pieces());
    }
    let y = FOUR_PI * n as f64;
    let m = m_n(n).re;
    let c = |x: f64| Complex64::new(x, y);
    pieces.push(Piece::new(Shape::Segment { a: c(b(n)), b: c(m - delta) }, "top"));
    pieces.push(Piece::new(Shape::Segment { a: c(m - delta), b: c(m + delta) }, "hole"));
    let right = b(n - 1);
    pieces.push(if right.is_finite() {
        Piece::new(Shape::Segment { a: c(m + delta), b: c(right) }, "top")
    } else {
        Piece::new(
            Shape::Ray {
                origin: c(m + delta),
                dir: Complex64::new(1.0, 0.0),
            },
            "top",
        )
    });
    let domain = PlanarDomain {
        name: format!("omega_{n}"),
        kind: DomainKind::Omega {
            barriers: used.to_vec(),
            top: Some(y),
        },
        pieces,
        far_radius: None,
        y_cap: f64::INFINITY,
        sample_box: (0.0, 10.0, 0.0, y),
    };
    let inf_re = boundary_inf_re(&domain);
    if (inf_re - b(n)).abs() > 1e-12 * b(n) {
        return Err(Error::InvalidParameter(format!(
            "inf Re over the boundary of Omega_{n} is {inf_re}, expected {}",
            b(n)
        )));
    }
    Ok(domain)
}

/// `R` minus all barriers in `barriers`, closed at altitude `y_cap` by a
/// segment labelled `far`.
pub fn omega(barriers: &[Barrier], y_cap: f64) -> Result<PlanarDomain> {
    check_chain(barriers)?;
    let count = barriers.len() as u32;
    if y_cap <= FOUR_PI * (count as f64 + 1.0) {
        return Err(invalid("y_cap must lie above the last barrier"));
    }
    let mut pieces = vec![hyperbola(0.0, b(1), f64::INFINITY, "L0")];
    for bar in barriers {
        let j = bar.n;
        let last = j == count;
        let l0_end = if last { 1.0 / y_cap } else { b(j + 1) };
        let l1_end = if last { 1.0 / (y_cap - FOUR_PI) } else { b(j) };
        pieces.push(hyperbola(0.0, l0_end, bar.c_plus.re, "L0"));
        pieces.push(hyperbola(FOUR_PI, l1_end, bar.c_minus.re, "L1"));
        pieces.extend(bar.pieces());
    }
    if count == 0 {
        pieces.push(hyperbola(0.0, 1.0 / y_cap, b(1), "L0"));
        pieces.push(hyperbola(FOUR_PI, 1.0 / (y_cap - FOUR_PI), f64::INFINITY, "L1"));
    }
    pieces.push(far_cap(y_cap));
    Ok(PlanarDomain {
        name: "omega".into(),
        kind: DomainKind::Omega {
            barriers: barriers.to_vec(),
            top: None,
        },
        pieces,
        far_radius: None,
        y_cap,
        sample_box: (0.0, 10.0, 0.0, FOUR_PI * (count as f64 + 1.0)),
    })
}

fn boundary_inf_re(domain: &PlanarDomain) -> f64 {
    domain
        .pieces
        .iter()
        .map(|p| match p.shape {
            Shape::Segment { a, b } => a.re.min(b.re),
            Shape::Ray { origin, dir } if dir.re >= 0.0 => origin.re,
            Shape::Hyperbola { xa, .. } => xa,
            _ => f64::NEG_INFINITY,
        })
        .fold(f64::INFINITY, f64::min)
}

/// Default walk start; `Im a < 4 pi` as the construction requires.
pub fn default_start() -> Complex64 {
    Complex64::new(0.5, 3.0)
}

/// Target sequence for the hole sizes.
#[derive(Debug, Clone)]
pub enum EpsScheme {
    /// `eps_n = e^{-n}`.
    Exp,
    /// `eps_n = eps` for all `n`.
    Const(f64),
    /// `eps_n = 1 / Psi(n Psi^{-1}(2 / b_{n+1}))`, slightly enlarged inside
    /// so that `Psi^{-1}(2/b_{n+1}) / Psi^{-1}(1/eps_n) <= 1/n`.
    Psi(OrliczFunction),
}

impl EpsScheme {
    pub fn name(&self) -> String {
        match self {
            EpsScheme::Exp => "exp".into(),
            EpsScheme::Const(e) => format!("const:{e}"),
            EpsScheme::Psi(psi) => format!("psi:{}", psi.id()),
        }
    }

    pub fn eps(&self, n: u32) -> Result<f64> {
        match self {
            EpsScheme::Exp => Ok((-(n as f64)).exp()),
            EpsScheme::Const(e) => Ok(*e),
            EpsScheme::Psi(psi) => {
                let inner = psi.inverse(2.0 / b(n + 1))?;
                Ok(1.0 / psi.eval(n as f64 * inner * (1.0 + 1e-9)))
            }
        }
    }
}

/// One bisection step: half-width, hit fraction and its upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub delta: f64,
    pub estimate: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleCalibration {
    pub n: u32,
    pub eps: f64,
    pub delta: f64,
    pub delta_max: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub upper: f64,
    pub paths: usize,
    pub trace: Vec<TraceRow>,
    /// Estimates are nondecreasing in the half-width along the trace.
    pub monotone: bool,
}

/// Upper confidence bound used for the calibration target; with no hits
/// the binomial deviation is taken at `p = 1/N`.
pub fn upper_bound(hits: usize, paths: usize) -> (f64, f64, f64) {
    let nf = paths as f64;
    let p = hits as f64 / nf;
    let se = (p * (1.0 - p) / nf).sqrt();
    let spread = (p.max(1.0 / nf) * (1.0 - p) / nf).sqrt();
    (p, se, p + 3.0 * spread)
}

/// Shrinks the hole of `Omega_n` until the hit fraction plus three
/// standard errors is at most `eps`. `Omega_n` does not depend on its hole
/// (the hole is only a label on the top segment), so one simulation serves
/// every candidate half-width.
pub fn calibrate_hole(
    barriers: &[Barrier],
    n: u32,
    a: Complex64,
    eps: f64,
    cfg: &WalkConfig,
) -> Result<HoleCalibration> {
    if !(a.im < FOUR_PI) {
        return Err(invalid("the start point must satisfy Im a < 4 pi"));
    }
    let floor = 10.0 / cfg.paths as f64;
    if !(eps > floor) {
        return Err(Error::StatisticalFloor(format!(
            "eps_{n} = {eps:e} is below the resolvability floor 10/paths = {floor:e}"
        )));
    }
    let dmax = delta_max(n);
    let init = INITIAL_HOLE_FRACTION * dmax;
    let domain = omega_n(barriers, n, init)?;
    if !domain.inside(a) {
        return Err(invalid(format!("start point {a} outside Omega_{n}")));
    }
    let sample = exit_sample(&domain, a, cfg)?;
    let centre = m_n(n).re;
    let mut offsets: Vec<f64> = sample
        .exits
        .iter()
        .filter(|e| matches!(e.label(&domain), "top" | "hole"))
        .map(|e| (e.point.re - centre).abs())
        .collect();
    offsets.sort_by(f64::total_cmp);
    let hits = |d: f64| offsets.partition_point(|&o| o <= d);
    let row = |d: f64| {
        let (p, _, up) = upper_bound(hits(d), cfg.paths);
        TraceRow { delta: d, estimate: p, upper: up }
    };
    let mut trace = vec![row(init)];
    let mut delta = init;
    if trace[0].upper > eps {
        let (mut lo, mut hi) = (0.0, init);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let r = row(mid);
            let ok = r.upper <= eps;
            trace.push(r);
            if ok {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * init {
                break;
            }
        }
        delta = lo;
        if delta <= 0.0 {
            return Err(Error::StatisticalFloor(format!(
                "no positive hole meets eps_{n} = {eps:e} with {} paths",
                cfg.paths
            )));
        }
    }
    let mut sorted = trace.clone();
    sorted.sort_by(|x, y| x.delta.total_cmp(&y.delta));
    let monotone = sorted.windows(2).all(|w| w[0].estimate <= w[1].estimate);
    let (p, se, up) = upper_bound(hits(delta), cfg.paths);
    Ok(HoleCalibration {
        n,
        eps,
        delta,
        delta_max: dmax,
        estimate: p,
        stderr: se,
        upper: up,
        paths: cfg.paths,
        trace,
        monotone,
    })
}

/// Calibrated barrier chain for indices `1..=count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierRun {
    pub scheme: String,
    pub start: Complex64,
    pub seed: u64,
    pub barriers: Vec<Barrier>,
    pub calibrations: Vec<HoleCalibration>,
}

/// Calibrates the holes one index at a time; `Omega_n` needs the barriers
/// below it, so the chain is sequential. Each index gets its own seed.
pub fn calibrate_chain(
    count: u32,
    scheme: &EpsScheme,
    a: Complex64,
    cfg: &WalkConfig,
) -> Result<BarrierRun> {
    let mut barriers: Vec<Barrier> = Vec::new();
    let mut calibrations = Vec::new();
    for n in 1..=count {
        let eps = scheme.eps(n)?;
        let local = WalkConfig {
            seed: derive_seed(cfg.seed, n as u64),
            ..cfg.clone()
        };
        let cal = calibrate_hole(&barriers, n, a, eps, &local)?;
        barriers.push(Barrier::new(n, cal.delta)?);
        calibrations.push(cal);
    }
    Ok(BarrierRun {
        scheme: scheme.name(),
        start: a,
        seed: cfg.seed,
        barriers,
        calibrations,
    })
}

/// Independent re-estimate of `omega_{Omega_n}(a, H_n)` for a calibrated
/// chain.
pub fn reestimate_hole(run: &BarrierRun, n: u32, cfg: &WalkConfig) -> Result<(f64, f64)> {
    let bar = run
        .barriers
        .get(n as usize - 1)
        .ok_or_else(|| invalid(format!("index {n} not calibrated")))?;
    let domain = omega_n(&run.barriers, n, bar.delta)?;
    let sample = exit_sample(&domain, run.start, cfg)?;
    let hits = sample
        .exits
        .iter()
        .filter(|e| e.label(&domain) == "hole")
        .count();
    let (p, se, _) = upper_bound(hits, cfg.paths);
    Ok((p, se))
}

/// `n` with `b_{n+1} < 2h <= b_n`.
pub fn bracket_index(h: f64) -> Result<u32> {
    if !(h > 0.0) || 2.0 * h > b(1) {
        return Err(invalid(format!("h = {h} outside (0, b_1/2]")));
    }
    let guess = (1.0 / (8.0 * PI * h)).floor();
    if guess > 1e9 {
        return Err(invalid(format!("h = {h} too small to bracket")));
    }
    let mut n = (guess as u32).max(1);
    while 2.0 * h > b(n) {
        n -= 1;
    }
    while b(n + 1) >= 2.0 * h {
        n += 1;
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoBoundRow {
    pub h: f64,
    pub n: u32,
    pub bound: f64,
    /// Calibrated upper confidence bound for `omega_{Omega_n}(a, H_n)`.
    pub measured_upper: f64,
    /// `Psi^{-1}(2/b_{n+1}) / Psi^{-1}(1/eps_n)` when a Psi is supplied.
    pub delta_bound: Option<f64>,
    pub delta_bound_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoBoundReport {
    pub scheme: String,
    pub rows: Vec<RhoBoundRow>,
    /// `c` in `rho(h) <= e^{-c/h}`, from a fit of `log bound` on `1/h`.
    pub fitted_c: Option<f64>,
    pub fitted_intercept: Option<f64>,
}

/// Bounds `rho_phi(h) <= eps_n` through the bracketing `b_{n+1} < 2h <= b_n`.
pub fn rho_bound_report(
    run: &BarrierRun,
    hs: &[f64],
    psi: Option<&OrliczFunction>,
) -> Result<RhoBoundReport> {
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        let n = bracket_index(h)?;
        let cal = run.calibrations.get(n as usize - 1).ok_or_else(|| {
            invalid(format!(
                "h = {h} needs eps_{n} but only {} indices are calibrated",
                run.calibrations.len()
            ))
        })?;
        let (delta_bound, delta_bound_ok) = match psi {
            Some(psi) => {
                let d = psi.inverse(2.0 / b(n + 1))? / psi.inverse(1.0 / cal.eps)?;
                (Some(d), Some(d <= 1.0 / n as f64))
            }
            None => (None, None),
        };
        rows.push(RhoBoundRow {
            h,
            n,
            bound: cal.eps,
            measured_upper: cal.upper,
            delta_bound,
            delta_bound_ok,
        });
    }
    let (mut fitted_c, mut fitted_intercept) = (None, None);
    if run.scheme == "exp" {
        let x: Vec<f64> = rows.iter().map(|r| 1.0 / r.h).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.bound.ln()).collect();
        if let Some(fit) = linear_fit(&x, &y) {
            fitted_c = Some(-fit.slope);
            fitted_intercept = Some(fit.intercept);
        }
    }
    Ok(RhoBoundReport {
        scheme: run.scheme.clone(),
        rows,
        fitted_c,
        fitted_intercept,
    })
}

/// `h_k = 1/(8 pi (k + 1/2))`, strictly inside the `k`-th bracket.
pub fn bracket_midpoints(count: u32) -> Vec<f64> {
    (1..=count)
        .map(|k| 1.0 / (8.0 * PI * (k as f64 + 0.5)))
        .collect()
}

pub fn default_y_cap() -> f64 {
    DEFAULT_Y_CAP
}
