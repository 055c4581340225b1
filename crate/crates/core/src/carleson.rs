//! Empirical pull-back measures, Carleson and Luecking windows, closed-range
//! tests and the test-function norms.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::adaptive;
use crate::stats::partial_sums_diverge;
use crate::symbols::SymbolMap;

const TWO_PI: f64 = 2.0 * PI;

/// A window near the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CarlesonWindow {
    /// `|z| >= 1 - h` and `|arg(z conj(xi))| <= h`, centre given by its angle.
    W { center: f64, h: f64 },
    /// `|z - xi| <= h`.
    S { center: f64, h: f64 },
    /// `1 - 2^-n <= |z|` and the angular band of index `j`.
    Dyadic { n: u32, j: u64 },
    /// `1 - 2^-n <= |z| < 1 - 2^-(n+1)` and the angular band of index `j`.
    Luecking { n: u32, j: u64 },
}

/// Angular band index at level `n`: band `j` is
/// `[(2j - 1) pi / 2^n, (2j + 1) pi / 2^n)`, so the `2^n` bands tile the
/// circle.
pub fn dyadic_index(z: Complex64, n: u32) -> u64 {
    let mut t = z.arg() / TWO_PI;
    if t < 0.0 {
        t += 1.0;
    }
    let count = 1u64 << n;
    ((t * count as f64 + 0.5).floor() as u64) % count
}

/// Signed angle from `center` to `arg z`, reduced to `(-pi, pi]`.
fn angle_offset(theta: f64, center: f64) -> f64 {
    let mut d = (theta - center).rem_euclid(TWO_PI);
    if d > PI {
        d -= TWO_PI;
    }
    d
}

impl CarlesonWindow {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CarlesonWindow::W { h, .. } | CarlesonWindow::S { h, .. } => {
                if !(h > 0.0 && h < 1.0) {
                    return Err(invalid(format!("window size must lie in (0,1), got {h}")));
                }
            }
            CarlesonWindow::Dyadic { n, j } | CarlesonWindow::Luecking { n, j } => {
                if n > 52 || j >= 1u64 << n {
                    return Err(invalid(format!("dyadic index ({n}, {j}) out of range")));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            CarlesonWindow::W { center, h } => {
                z.norm() >= 1.0 - h && angle_offset(z.arg(), center).abs() <= h
            }
            CarlesonWindow::S { center, h } => (z - Complex64::from_polar(1.0, center)).norm() <= h,
            CarlesonWindow::Dyadic { n, j } => {
                z.norm() >= 1.0 - 2f64.powi(-(n as i32)) && dyadic_index(z, n) == j
            }
            CarlesonWindow::Luecking { n, j } => {
                let m = z.norm();
                m >= 1.0 - 2f64.powi(-(n as i32))
                    && m < 1.0 - 2f64.powi(-(n as i32) - 1)
                    && dyadic_index(z, n) == j
            }
        }
    }
}

/// Empirical pullback measure: boundary values on the uniform grid
/// `theta_i = 2 pi i / M`, each carrying mass `1/M`.
#[derive(Debug, Clone)]
pub struct PullbackSample {
    pub symbol_id: String,
    pub eps: f64,
    pub values: Vec<Complex64>,
    pub unconverged: Vec<bool>,
    /// Moduli and arguments, cached for the window sweeps.
    moduli: Vec<f64>,
    angles: Vec<f64>,
}

/// Measure estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub stderr: f64,
    pub count: u64,
}

impl MeasureEstimate {
    fn from_count(count: u64, total: usize) -> Self {
        let m = total as f64;
        let p = count as f64 / m;
        MeasureEstimate {
            value: p,
            stderr: (p * (1.0 - p) / m).sqrt(),
            count,
        }
    }
}

/// Samples the boundary values of `phi`.
///
/// Blaschke-type symbols are evaluated on the circle itself, where they are
/// unimodular; every other kind uses the radial value at `1 - eps` with the
/// `eps` versus `eps/2` convergence tag. More than 1% unconverged samples is
/// an error.
pub fn build_pullback(phi: &SymbolMap, m: usize, eps: f64) -> Result<PullbackSample> {
    if m < 1 << 10 || !m.is_power_of_two() {
        return Err(invalid(format!("sample count must be a power of two >= 1024, got {m}")));
    }
    let on_circle = phi.evaluates_on_circle();
    let pairs: Vec<(Complex64, bool)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let theta = TWO_PI * i as f64 / m as f64;
            if on_circle {
                let v = phi.eval_unchecked(Complex64::from_polar(1.0, theta));
                Ok((v, v.is_finite()))
            } else {
                phi.radial_boundary_value(theta, eps)
                    .map(|b| (b.value, b.converged))
            }
        })
        .collect::<Result<_>>()?;
    let values: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
    let unconverged: Vec<bool> = pairs.iter().map(|p| !p.1).collect();
    let bad = unconverged.iter().filter(|&&u| u).count();
    if bad as f64 > 0.01 * m as f64 {
        return Err(Error::NotConverged(format!(
            "{bad} of {m} boundary samples of {} did not converge",
            phi.id()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(v.norm() <= 1.0 + 1e-9)) {
        return Err(Error::NotConverged(format!(
            "boundary value {v} of {} lies outside the closed disk",
            phi.id()
        )));
    }
    Ok(PullbackSample::from_values(phi.id().to_string(), eps, values, unconverged))
}

impl PullbackSample {
    pub fn from_values(
        symbol_id: String,
        eps: f64,
        values: Vec<Complex64>,
        unconverged: Vec<bool>,
    ) -> Self {
        let moduli = values.iter().map(|v| v.norm()).collect();
        let angles = values.iter().map(|v| v.arg()).collect();
        PullbackSample {
            symbol_id,
            eps,
            values,
            unconverged,
            moduli,
            angles,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn unconverged_fraction(&self) -> f64 {
        self.unconverged.iter().filter(|&&u| u).count() as f64 / self.len() as f64
    }

    /// Fraction of samples inside `window`.
    pub fn region_measure(&self, window: &CarlesonWindow) -> Result<MeasureEstimate> {
        window.validate()?;
        let count = self.values.iter().filter(|&&v| window.contains(v)).count() as u64;
        Ok(MeasureEstimate::from_count(count, self.len()))
    }

    /// Sorted arguments of the samples with modulus at least `1 - h`, in
    /// three copies shifted by `-2 pi`, `0` and `2 pi`.
    fn outer_angles(&self, h: f64) -> Vec<f64> {
        let mut a: Vec<f64> = self
            .moduli
            .iter()
            .zip(&self.angles)
            .filter(|(&m, _)| m >= 1.0 - h)
            .map(|(_, &t)| t.rem_euclid(TWO_PI))
            .collect();
        a.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = a.iter().map(|t| t - TWO_PI).collect();
        out.extend_from_slice(&a);
        out.extend(a.iter().map(|t| t + TWO_PI));
        out
    }

    /// Counts `W(xi_g, h)` for the `g` centres `2 pi g / G`.
    ///
    /// Angles are located by binary search in the tripled sorted array; the
    /// samples within `1e-9` of either edge are rechecked with the exact
    /// predicate so the result matches [`CarlesonWindow::contains`].
    fn window_counts(&self, h: f64, g: usize) -> Vec<u64> {
        let angles = self.outer_angles(h);
        let base = angles.len() / 3;
        if base == 0 {
            return vec![0; g];
        }
        (0..g)
            .into_par_iter()
            .map(|k| {
                let center = TWO_PI * k as f64 / g as f64;
                if h >= PI {
                    return base as u64;
                }
                let lo = center - h;
                let hi = center + h;
                let fuzz = 1e-9;
                let a = angles.partition_point(|&t| t < lo - fuzz);
                let b = angles.partition_point(|&t| t <= hi + fuzz);
                let inner_a = angles.partition_point(|&t| t < lo + fuzz);
                let inner_b = angles.partition_point(|&t| t <= hi - fuzz);
                let mut count = inner_b.saturating_sub(inner_a) as u64;
                for &t in angles[a..inner_a].iter().chain(&angles[inner_b.max(inner_a)..b]) {
                    if angle_offset(t, center).abs() <= h {
                        count += 1;
                    }
                }
                count
            })
            .collect()
    }

    /// `max_g m_phi[W(xi_g, h)]` over `g` equally spaced centres, with the
    /// index of a maximizing centre.
    pub fn rho_with_centers(&self, h: f64, g: usize) -> Result<RhoEstimate> {
        if !(h > 0.0 && h < 1.0) {
            return Err(invalid(format!("rho needs h in (0,1), got {h}")));
        }
        let min_g = (TWO_PI / h).ceil() as usize;
        if g < min_g {
            return Err(invalid(format!(
                "{g} centres do not cover the circle for h = {h}; need at least {min_g}"
            )));
        }
        self.check_floor(h)?;
        let counts = self.window_counts(h, g);
        let (best, &count) = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("at least one centre");
        let est = MeasureEstimate::from_count(count, self.len());
        Ok(RhoEstimate {
            h,
            centers: g,
            rho: est.value,
            stderr: est.stderr,
            argmax_center: TWO_PI * best as f64 / g as f64,
        })
    }

    /// Resolution floor `h >= 10 / M`.
    pub fn check_floor(&self, h: f64) -> Result<()> {
        let floor = 10.0 / self.len() as f64;
        if h < floor {
            return Err(Error::StatisticalFloor(format!(
                "window size h = {h} is below the resolution floor 10/M = {floor} for M = {}",
                self.len()
            )));
        }
        Ok(())
    }

    pub fn rho(&self, h: f64) -> Result<RhoEstimate> {
        self.rho_with_centers(h, default_centers(h))
    }

    /// Carleson function over a sweep, using one centre grid (fine enough
    /// for the smallest `h`) for every entry so that the table is monotone.
    pub fn rho_table(&self, hs: &[f64]) -> Result<Vec<RhoEstimate>> {
        let hmin = hs.iter().copied().fold(f64::INFINITY, f64::min);
        if !hmin.is_finite() {
            return Ok(Vec::new());
        }
        let g = default_centers(hmin);
        hs.iter().map(|&h| self.rho_with_centers(h, g)).collect()
    }

    /// Window counts per angular band at level `n` among samples with
    /// `|z| >= 1 - 2^-n`.
    pub fn dyadic_counts(&self, n: u32) -> Vec<u64> {
        let mut counts = vec![0u64; 1usize << n];
        let floor = 1.0 - 2f64.powi(-(n as i32));
        for (v, &m) in self.values.iter().zip(&self.moduli) {
            if m >= floor {
                counts[dyadic_index(*v, n) as usize] += 1;
            }
        }
        counts
    }

    /// Partial sums `S_n = sum_{k <= n} sum_j [2^k m_phi(W_{k,j})]^{p/2}`.
    pub fn luecking_sum(&self, p: f64, n_max: u32) -> Result<LueckingSums> {
        if !(p > 0.0) {
            return Err(invalid(format!("Luecking exponent must be positive, got {p}")));
        }
        let limit = (self.len() as f64).log2().floor() as i64 - 4;
        if n_max < 1 || n_max as i64 > limit {
            return Err(invalid(format!(
                "n_max = {n_max} must lie in 1..={limit} for M = {}",
                self.len()
            )));
        }
        let m = self.len() as f64;
        let mut partial = Vec::with_capacity(n_max as usize);
        let mut warnings = Vec::new();
        let mut acc = 0.0;
        for n in 1..=n_max {
            let counts = self.dyadic_counts(n);
            let scale = 2f64.powi(n as i32) / m;
            let level: f64 = counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| (scale * c as f64).powf(0.5 * p))
                .sum();
            let sparse = counts.iter().filter(|&&c| c > 0 && c < 10).count();
            if sparse > 0 {
                warnings.push(format!(
                    "level {n}: {sparse} windows hold fewer than 10 samples"
                ));
            }
            acc += level;
            partial.push(acc);
        }
        Ok(LueckingSums {
            p,
            diverging: partial_sums_diverge(&partial),
            partial,
            warnings,
        })
    }

    /// `min_{h, xi} m_phi[W(xi, h)] / h` with a consistency verdict.
    pub fn closed_range_test(&self, hs: &[f64], centers: Option<usize>) -> Result<ClosedRange> {
        if hs.is_empty() {
            return Err(invalid("closed-range test needs at least one h"));
        }
        let mut rows = Vec::with_capacity(hs.len());
        for &h in hs {
            if !(h > 0.0 && h < 1.0) {
                return Err(invalid(format!("window size must lie in (0,1), got {h}")));
            }
            self.check_floor(h)?;
            let g = centers.unwrap_or_else(|| default_centers(h));
            let counts = self.window_counts(h, g);
            let (k, &min) = counts
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0)))
                .expect("at least one centre");
            let est = MeasureEstimate::from_count(min, self.len());
            rows.push(ClosedRangeRow {
                h,
                min_measure: est.value,
                ratio: est.value / h,
                stderr_over_h: est.stderr / h,
                argmin_center: TWO_PI * k as f64 / g as f64,
            });
        }
        let c_est = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let noise = rows.iter().map(|r| r.stderr_over_h).fold(0.0, f64::max);
        let consistent = c_est > 3.0 * noise;
        Ok(ClosedRange {
            c_est,
            noise,
            verdict: if consistent {
                "closed-range-consistent".into()
            } else {
                "fails".into()
            },
            consistent,
            rows,
        })
    }

    /// `max_g m_phi[S(xi_g, x)] / x`, the empirical Carleson constant at
    /// scale `x`.
    pub fn s_window_ratio(&self, x: f64, g: usize) -> f64 {
        let best = (0..g)
            .into_par_iter()
            .map(|k| {
                let w = CarlesonWindow::S {
                    center: TWO_PI * k as f64 / g as f64,
                    h: x,
                };
                self.values.iter().filter(|&&v| w.contains(v)).count()
            })
            .max()
            .unwrap_or(0);
        best as f64 / self.len() as f64 / x
    }

    /// Mass of the collar `{1 - collar <= |z|, arg z in [a, a + h]}` over an
    /// arc of length `h` starting at angle `a`.
    pub fn collar_mass(&self, a: f64, h: f64, collar: f64) -> f64 {
        let count = self
            .moduli
            .iter()
            .zip(&self.angles)
            .filter(|(&m, &t)| m >= 1.0 - collar && (t - a).rem_euclid(TWO_PI) <= h)
            .count();
        count as f64 / self.len() as f64
    }

    /// Fraction of samples with modulus below `radius`.
    pub fn mass_below(&self, radius: f64) -> f64 {
        self.moduli.iter().filter(|&&m| m < radius).count() as f64 / self.len() as f64
    }
}

/// `ceil(8 pi / h)` centres.
pub fn default_centers(h: f64) -> usize {
    (8.0 * PI / h).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub h: f64,
    pub centers: usize,
    pub rho: f64,
    pub stderr: f64,
    pub argmax_center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LueckingSums {
    pub p: f64,
    pub partial: Vec<f64>,
    pub diverging: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedRangeRow {
    pub h: f64,
    pub min_measure: f64,
    pub ratio: f64,
    pub stderr_over_h: f64,
    pub argmin_center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedRange {
    pub c_est: f64,
    pub noise: f64,
    pub verdict: String,
    pub consistent: bool,
    pub rows: Vec<ClosedRangeRow>,
}

/// `int_{-pi}^{pi} |cos(t/2)|^{pN} dt`, by adaptive Gauss-Legendre on
/// `[0, pi]` using the symmetry of the integrand.
pub fn test_function_norm(n: u64, p: f64) -> Result<f64> {
    if n < 1 {
        return Err(invalid("test function index N must be at least 1"));
    }
    if !(p >= 1.0) {
        return Err(invalid(format!("test function exponent must be >= 1, got {p}")));
    }
    let e = p * n as f64;
    let (v, ok) = adaptive(|t: f64| (0.5 * t).cos().powf(e), 0.0, PI, 2e-14);
    if !ok {
        return Err(Error::NotConverged(format!(
            "quadrature for the N = {n}, p = {p} test function did not converge"
        )));
    }
    Ok(2.0 * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_sample(m: usize) -> PullbackSample {
        build_pullback(&SymbolMap::identity(), m, 1e-6).unwrap()
    }

    #[test]
    fn dyadic_bands_tile() {
        for n in 1..6 {
            for k in 0..(1u64 << n) {
                // band centre and both edges
                let c = Complex64::from_polar(1.0, TWO_PI * k as f64 / (1u64 << n) as f64);
                assert_eq!(dyadic_index(c, n), k);
            }
        }
        // the lower edge (2j - 1) pi / 2^n belongs to band j
        let edge = Complex64::from_polar(1.0, PI / 4.0);
        assert_eq!(dyadic_index(edge, 2), 1);
    }

    #[test]
    fn fast_counts_match_brute_force() {
        let phi = SymbolMap::monomial(3).unwrap();
        let s = build_pullback(&phi, 1 << 12, 1e-6).unwrap();
        for &h in &[0.3, 0.1, 0.0123] {
            let g = default_centers(h);
            let fast = s.window_counts(h, g);
            for (k, &c) in fast.iter().enumerate().step_by(7) {
                let w = CarlesonWindow::W {
                    center: TWO_PI * k as f64 / g as f64,
                    h,
                };
                assert_eq!(c, s.region_measure(&w).unwrap().count, "h={h} k={k}");
            }
        }
    }

    #[test]
    fn identity_window_measure() {
        let s = identity_sample(1 << 14);
        let est = s.region_measure(&CarlesonWindow::W { center: 0.0, h: 0.1 }).unwrap();
        assert!((est.value - 0.1 / PI).abs() <= 3.0 * est.stderr);
        let r = s.rho(0.1).unwrap();
        assert!((r.rho - 0.1 / PI).abs() <= 3.0 * r.stderr);
    }

    #[test]
    fn scaling_examples() {
        let s = build_pullback(&SymbolMap::scaling(0.5).unwrap(), 1 << 12, 1e-6).unwrap();
        assert_eq!(s.rho(0.3).unwrap().rho, 0.0);
        let r = s.rho(0.6).unwrap();
        assert!((r.rho - 0.6 / PI).abs() < 3.0 / s.len() as f64 + 3.0 * r.stderr);
        let sums = s.luecking_sum(2.0, 8).unwrap();
        assert!(sums.partial.iter().all(|&v| v == sums.partial[0]));
        assert!(!sums.diverging);
    }

    #[test]
    fn monomial_dyadic_window() {
        let s = build_pullback(&SymbolMap::monomial(2).unwrap(), 1 << 12, 1e-6).unwrap();
        let est = s.region_measure(&CarlesonWindow::Dyadic { n: 3, j: 2 }).unwrap();
        assert!((est.value - 0.125).abs() <= 3.0 * est.stderr.max(1.0 / s.len() as f64));
    }

    #[test]
    fn tiling_is_exact() {
        let one = Complex64::new(1.0, 0.0);
        let phi = SymbolMap::lft(one, one * 0.3, one * 0.0, one * 1.35).unwrap();
        let s = build_pullback(&phi, 1 << 12, 1e-6).unwrap();
        for n in 1..8 {
            let inside: u64 = s.dyadic_counts(n).iter().sum();
            let below = s.mass_below(1.0 - 2f64.powi(-(n as i32)));
            assert!((inside as f64 / s.len() as f64 + below - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_luecking_diverges() {
        let s = identity_sample(1 << 14);
        for p in [1.0, 2.0, 4.0] {
            let sums = s.luecking_sum(p, 10).unwrap();
            assert!(sums.diverging, "p={p}: {:?}", sums.partial);
        }
        assert!(s.luecking_sum(2.0, 11).is_err());
    }

    #[test]
    fn closed_range_examples() {
        let hs = [0.2, 0.1, 0.05, 0.025];
        let id = identity_sample(1 << 14).closed_range_test(&hs, None).unwrap();
        assert!(id.consistent);
        assert!(id.c_est >= 0.9 / PI && id.c_est <= 1.1 / PI);
        let sc = build_pullback(&SymbolMap::scaling(0.5).unwrap(), 1 << 14, 1e-6)
            .unwrap()
            .closed_range_test(&[0.25, 0.1], None)
            .unwrap();
        assert_eq!(sc.c_est, 0.0);
        assert!(!sc.consistent);
    }

    #[test]
    fn punctured_map_exceeds_unconverged_budget() {
        // radial values oscillate without converging near theta = 0
        let r = build_pullback(&SymbolMap::punctured(), 1 << 12, 1e-6);
        assert!(matches!(r, Err(Error::NotConverged(_))));
    }

    #[test]
    fn resolution_floor_is_enforced() {
        let s = identity_sample(1 << 10);
        assert!(matches!(s.rho(0.005), Err(Error::StatisticalFloor(_))));
    }

    #[test]
    fn rho_table_is_monotone() {
        let s = build_pullback(&SymbolMap::monomial(2).unwrap(), 1 << 12, 1e-6).unwrap();
        let hs = [0.02, 0.04, 0.08, 0.16, 0.32];
        let t = s.rho_table(&hs).unwrap();
        for w in t.windows(2) {
            assert!(w[0].rho <= w[1].rho);
        }
    }

    #[test]
    fn test_function_examples() {
        assert!((test_function_norm(1, 2.0).unwrap() - PI).abs() < 1e-12);
        let exact = TWO_PI * 184756.0 / 1048576.0;
        assert!((test_function_norm(10, 2.0).unwrap() - exact).abs() < 1e-12);
        let v = test_function_norm(10_000, 2.0).unwrap() * 100.0;
        assert!((v / (4.0 * PI).sqrt() - 1.0).abs() < 0.01);
    }
}
