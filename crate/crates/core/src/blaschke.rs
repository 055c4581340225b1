//! Blaschke factors with equidistributed zeros, the slow Blaschke product
//! and the pseudo-hyperbolic distance.

use std::f64::consts::{E, LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::orlicz::{delta_from_psi, DecayFunction, OrliczFunction, PsiSpec};

/// Above this exponent powers switch from repeated squaring to log-polar
/// form.
const LOG_POLAR_THRESHOLD: u64 = 10_000;

/// `z^p` for `|z| <= 1` without overflow.
///
/// Repeated squaring renormalizes the running power whenever its modulus
/// drops below `2^-500`, keeping the scale as a separate binary exponent.
/// Large exponents use `|z|^p e^{i p arg z}`, which is exact up to a phase
/// perturbation of order `p * ulp(arg z)`, i.e. the value at a point of the
/// same modulus rotated by a negligible angle.
pub fn pow_disk(z: Complex64, p: u64) -> Complex64 {
    if p == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if z == Complex64::new(0.0, 0.0) {
        return z;
    }
    if p > LOG_POLAR_THRESHOLD {
        let m = z.norm();
        let lm = if (0.5..=2.0).contains(&m) {
            (m - 1.0).ln_1p()
        } else {
            m.ln()
        };
        let modulus = (p as f64 * lm).exp();
        let theta = z.arg();
        let phase = reduce_phase(p, theta);
        return Complex64::from_polar(modulus, phase);
    }
    let tiny = 2f64.powi(-500);
    let mut result = Complex64::new(1.0, 0.0);
    let mut result_exp = 0i64;
    let mut base = z;
    let mut base_exp = 0i64;
    let mut e = p;
    while e > 0 {
        if e & 1 == 1 {
            result *= base;
            result_exp += base_exp;
            if result.norm() < tiny {
                result *= 2f64.powi(500);
                result_exp -= 500;
            }
        }
        e >>= 1;
        if e > 0 {
            base = base * base;
            base_exp *= 2;
            if base.norm() < tiny {
                base *= 2f64.powi(500);
                base_exp -= 500;
            }
        }
    }
    if result_exp < -1100 {
        return Complex64::new(0.0, 0.0);
    }
    let mut scale_exp = result_exp;
    while scale_exp < 0 {
        let step = scale_exp.max(-500);
        result *= 2f64.powi(step as i32);
        scale_exp -= step;
    }
    result
}

fn reduce_phase(p: u64, theta: f64) -> f64 {
    (p as f64 * theta).rem_euclid(2.0 * PI)
}

/// `r^p` computed as `exp(p log r)` with `log r = log1p(r - 1)`.
pub fn radius_power(r: f64, p: u64) -> f64 {
    (p as f64 * (r - 1.0).ln_1p()).exp()
}

/// Finite Blaschke product with `p` zeros equidistributed on the circle of
/// radius `r`, normalized to be positive at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquidistributedFactor {
    pub p: u64,
    pub r: f64,
}

impl EquidistributedFactor {
    pub fn new(p: u64, r: f64) -> Result<Self> {
        let f = EquidistributedFactor { p, r };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(invalid("Blaschke factor needs p >= 1"));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(invalid(format!("Blaschke factor radius must lie in (0,1), got {}", self.r)));
        }
        Ok(())
    }

    /// Closed form `(z^p - r^p) / ((rz)^p - 1)`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let rp = radius_power(self.r, self.p);
        let zp = pow_disk(z, self.p);
        (zp - rp) / (zp * rp - 1.0)
    }

    /// Direct product of the `p` Möbius factors
    /// `(r - e^{-i theta_k} z) / (1 - r e^{-i theta_k} z)`; an oracle for
    /// the closed form at moderate `p`.
    pub fn eval_product(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for k in 1..=self.p {
            let theta = 2.0 * PI * k as f64 / self.p as f64;
            let w = Complex64::from_polar(1.0, -theta) * z;
            acc *= (self.r - w) / (1.0 - self.r * w);
        }
        acc
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        (1..=self.p)
            .map(|k| Complex64::from_polar(self.r, 2.0 * PI * k as f64 / self.p as f64))
            .collect()
    }
}

/// Pseudo-hyperbolic distance `|u - v| / |1 - conj(u) v|`.
pub fn pseudo_hyperbolic(u: Complex64, v: Complex64) -> f64 {
    let num = (u - v).norm();
    if num == 0.0 {
        return 0.0;
    }
    num / (1.0 - u.conj() * v).norm()
}

/// Index of the first factor of the infinite product.
pub const START_INDEX: u32 = 7;
/// Default truncation depth.
pub const DEFAULT_DEPTH: u32 = 24;
/// A dyadic radius `1 - 2^-m` stays exactly representable up to `m = 53`.
const MAX_EXPONENT: u32 = 53;

/// Data of the slow Blaschke product `B(z) = z^N prod_{n >= 7} B_n(z)`,
/// truncated at depth `M`.
///
/// `h_n = 2^-m_n` is stored through its exponent so that `p_n` is exactly
/// reproducible.
#[derive(Debug, Clone)]
pub struct SlowBlaschkeSpec {
    pub delta: Option<DecayFunction>,
    pub psi: Option<PsiSpec>,
    pub start: u32,
    pub depth: u32,
    /// `m_n` for `n = 6, 7, ..., depth`.
    pub h_log2: Vec<u32>,
    /// `p_n` for `n = 7, ..., depth`.
    pub p: Vec<u64>,
    /// Exponent of the monomial factor.
    pub n_monomial: u64,
}

/// `p^2 h^2 / (2e) > 2^-n`, the defining inequality of `p_n`.
pub fn defino_holds(p: u64, h: f64, n: u32) -> bool {
    let ph = p as f64 * h;
    ph * ph / (2.0 * E) > 2f64.powi(-(n as i32))
}

/// Minimal `p` satisfying [`defino_holds`].
pub fn minimal_p(h: f64, n: u32) -> u64 {
    let target = (2.0 * E * 2f64.powi(-(n as i32))).sqrt() / h;
    let mut p = (target.floor() as u64).max(1);
    while !defino_holds(p, h, n) {
        p += 1;
    }
    while p > 1 && defino_holds(p - 1, h, n) {
        p -= 1;
    }
    p
}

/// `r^N < 1/2` with `r = 1 - h`.
pub fn half_power_holds(n: u64, h: f64) -> bool {
    (n as f64 * (-h).ln_1p()).exp() < 0.5
}

/// Minimal `N` with `(1 - h)^N < 1/2`.
pub fn minimal_monomial_exponent(h: f64) -> u64 {
    let mut n = (LN_2 / -(-h).ln_1p()).ceil().max(1.0) as u64;
    while !half_power_holds(n, h) {
        n += 1;
    }
    while n > 1 && half_power_holds(n - 1, h) {
        n -= 1;
    }
    n
}

/// `chi(x) = sup_{t <= x} max(2 delta(t), sqrt t)`.
///
/// For a rate nondecreasing in `t` the supremum sits at `t = x`; otherwise
/// it is taken over a 4096-point logarithmic grid spanning `[x 2^-40, x]`.
pub fn chi(delta: &DecayFunction, x: f64) -> Result<f64> {
    if delta.is_monotone() {
        return Ok((2.0 * delta.eval(x)?).max(x.sqrt()));
    }
    const GRID: usize = 4096;
    let mut best = x.sqrt();
    for i in 0..GRID {
        let t = x * 2f64.powf(-40.0 * i as f64 / (GRID - 1) as f64);
        best = best.max(2.0 * delta.eval(t)?);
    }
    Ok(best)
}

impl SlowBlaschkeSpec {
    pub fn h(&self, n: u32) -> f64 {
        2f64.powi(-(self.h_log2[(n - 6) as usize] as i32))
    }

    pub fn r(&self, n: u32) -> f64 {
        1.0 - self.h(n)
    }

    pub fn p_n(&self, n: u32) -> u64 {
        self.p[(n - self.start) as usize]
    }

    pub fn factor(&self, n: u32) -> EquidistributedFactor {
        EquidistributedFactor {
            p: self.p_n(n),
            r: self.r(n),
        }
    }

    pub fn factors(&self) -> impl Iterator<Item = (u32, EquidistributedFactor)> + '_ {
        (self.start..=self.depth).map(move |n| (n, self.factor(n)))
    }

    /// Smallest `1 - |z|` for which the truncated product certifies the
    /// slow-decay bound.
    pub fn certified_floor(&self) -> f64 {
        self.h(self.depth)
    }

    /// Truncated value `z^N prod_{n=7}^{M} B_n(z)`. Its modulus bounds the
    /// modulus of the full product from above.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = pow_disk(z, self.n_monomial);
        for (_, f) in self.factors() {
            if acc == Complex64::new(0.0, 0.0) {
                break;
            }
            acc *= f.eval(z);
        }
        acc
    }

    /// `1 - |B_trunc(z)| - delta(1 - |z|)`; nonnegative where the
    /// construction's bound holds.
    pub fn certificate_margin(&self, z: Complex64) -> Result<f64> {
        let delta = self
            .delta
            .as_ref()
            .ok_or_else(|| invalid("slow Blaschke spec carries no decay function"))?;
        let t = 1.0 - z.norm();
        Ok(1.0 - self.eval(z).norm() - delta.eval(t)?)
    }

    /// Re-verifies every structural property of the construction.
    pub fn check_invariants(&self) -> Result<SpecInvariants> {
        let mut out = SpecInvariants {
            chi_bound: true,
            h_bound: true,
            p_minimal: true,
            ph_half: true,
            r6_half: half_power_holds(self.n_monomial, self.h(6))
                && !(self.n_monomial > 1 && half_power_holds(self.n_monomial - 1, self.h(6))),
            h_decreasing: true,
            blaschke_partial_sum: true,
        };
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for n in 6..=self.depth {
            let h = self.h(n);
            if let Some(d) = &self.delta {
                out.chi_bound &= chi(d, h)? <= 2f64.powi(-(n as i32));
            }
            out.h_bound &= h <= 2f64.powi(-2 * n as i32);
            if n > 6 {
                out.h_decreasing &= h < self.h(n - 1);
            }
            if n >= self.start {
                let p = self.p_n(n);
                out.p_minimal &= defino_holds(p, h, n) && (p == 1 || !defino_holds(p - 1, h, n));
                let bound = (8.0 * E * 2f64.powi(-(n as i32))).sqrt();
                out.ph_half &= p as f64 * h <= bound && bound <= 0.5;
                lhs += p as f64 * h;
                rhs += bound;
            }
        }
        out.blaschke_partial_sum = lhs <= rhs;
        Ok(out)
    }

    pub fn to_file(&self) -> SlowSpecFile {
        SlowSpecFile {
            start: self.start,
            depth: self.depth,
            h_log2: self.h_log2.clone(),
            p: self.p.clone(),
            n_monomial: self.n_monomial,
            psi: self.psi.clone(),
            delta: self.delta.as_ref().map(|d| d.id()),
        }
    }

    pub fn from_file(file: &SlowSpecFile) -> Result<Self> {
        if file.start != START_INDEX || file.depth < 8 {
            return Err(Error::Config(format!(
                "slow spec has start {} and depth {}; expected start 7 and depth >= 8",
                file.start, file.depth
            )));
        }
        let levels = (file.depth - 5) as usize;
        if file.h_log2.len() != levels || file.p.len() != levels - 1 {
            return Err(Error::Config("slow spec sequence lengths do not match depth".into()));
        }
        if file.h_log2.iter().any(|&m| m == 0 || m > MAX_EXPONENT) || file.p.contains(&0) {
            return Err(Error::Config("slow spec entries out of range".into()));
        }
        let delta = match &file.psi {
            Some(spec) => Some(delta_from_psi(&OrliczFunction::from_spec(spec)?)),
            None => None,
        };
        Ok(SlowBlaschkeSpec {
            delta,
            psi: file.psi.clone(),
            start: file.start,
            depth: file.depth,
            h_log2: file.h_log2.clone(),
            p: file.p.clone(),
            n_monomial: file.n_monomial,
        })
    }
}

/// Results of [`SlowBlaschkeSpec::check_invariants`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecInvariants {
    pub chi_bound: bool,
    pub h_bound: bool,
    pub p_minimal: bool,
    pub ph_half: bool,
    pub r6_half: bool,
    pub h_decreasing: bool,
    pub blaschke_partial_sum: bool,
}

impl SpecInvariants {
    pub fn all(&self) -> bool {
        self.chi_bound
            && self.h_bound
            && self.p_minimal
            && self.ph_half
            && self.r6_half
            && self.h_decreasing
            && self.blaschke_partial_sum
    }
}

/// On-disk form of a slow Blaschke spec. `h_n = 2^-h_log2[n-6]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlowSpecFile {
    pub start: u32,
    pub depth: u32,
    pub h_log2: Vec<u32>,
    pub p: Vec<u64>,
    pub n_monomial: u64,
    #[serde(default)]
    pub psi: Option<PsiSpec>,
    #[serde(default)]
    pub delta: Option<String>,
}

/// Builds the slow Blaschke product for the rate `delta`, truncated at depth
/// `depth`.
///
/// Each `h_n` is the largest dyadic `2^-m` with `chi(h) <= 2^-n` and
/// `m > m_{n-1}`; the scan starts at `m = 2n` since `chi(h) >= sqrt(h)`.
pub fn build_slow_blaschke(delta: &DecayFunction, depth: u32) -> Result<SlowBlaschkeSpec> {
    if depth < 8 {
        return Err(invalid(format!("truncation depth must be at least 8, got {depth}")));
    }
    delta.check_monotone_near_zero()?;
    let mut h_log2 = Vec::with_capacity((depth - 5) as usize);
    let mut prev = 0u32;
    for n in 6..=depth {
        let mut m = (2 * n).max(prev + 1);
        loop {
            if m > MAX_EXPONENT {
                return Err(Error::ResolutionFloor(format!(
                    "no dyadic h >= 2^-{MAX_EXPONENT} satisfies chi(h) <= 2^-{n}; \
                     the decay function is too slow for depth {depth}"
                )));
            }
            if chi(delta, 2f64.powi(-(m as i32)))? <= 2f64.powi(-(n as i32)) {
                break;
            }
            m += 1;
        }
        h_log2.push(m);
        prev = m;
    }
    let p = (START_INDEX..=depth)
        .map(|n| minimal_p(2f64.powi(-(h_log2[(n - 6) as usize] as i32)), n))
        .collect();
    let n_monomial = minimal_monomial_exponent(2f64.powi(-(h_log2[0] as i32)));
    Ok(SlowBlaschkeSpec {
        delta: Some(delta.clone()),
        psi: delta.psi().map(|p| p.spec().clone()),
        start: START_INDEX,
        depth,
        h_log2,
        p,
        n_monomial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square_delta() -> DecayFunction {
        delta_from_psi(&OrliczFunction::power(2.0).unwrap())
    }

    #[test]
    fn factor_examples() {
        let f = EquidistributedFactor::new(1, 0.5).unwrap();
        assert!(f.eval(c(0.5, 0.0)).norm() < 1e-16);
        assert!((f.eval(c(-0.5, 0.0)).norm() - 0.8).abs() < 1e-15);
        let g = EquidistributedFactor::new(2, 0.5).unwrap();
        let v = g.eval(c(0.0, 0.5));
        assert!((v - c(0.5 / 1.0625, 0.0)).norm() < 1e-15);
        assert!((g.eval_product(c(0.0, 0.5)) - v).norm() < 1e-15);
    }

    #[test]
    fn zeros_are_zeros() {
        let f = EquidistributedFactor::new(7, 0.8).unwrap();
        for z in f.zeros() {
            assert!(f.eval(z).norm() < 1e-13);
        }
    }

    #[test]
    fn closed_form_agrees_with_product_for_large_p() {
        let f = EquidistributedFactor::new(3000, 1.0 - 2f64.powi(-14)).unwrap();
        for &theta in &[0.1, 1.3, 2.9] {
            for &m in &[0.99, 1.0 - 2f64.powi(-14), 1.0] {
                let z = Complex64::from_polar(m, theta);
                assert!((f.eval(z) - f.eval_product(z)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn log_polar_power_matches_squaring() {
        let z = Complex64::from_polar(1.0 - 1e-6, 0.7);
        let p = LOG_POLAR_THRESHOLD;
        let a = pow_disk(z, p);
        let mut b = pow_disk(z, p / 2);
        b = b * b;
        assert!((a - b).norm() < 1e-11);
        let big = pow_disk(z, p + 1);
        let small = pow_disk(z, p) * z;
        assert!((big - small).norm() < 1e-11);
    }

    #[test]
    fn power_underflows_gracefully() {
        let v = pow_disk(c(0.1, 0.1), 9000);
        assert_eq!(v, c(0.0, 0.0));
        let w = pow_disk(c(0.5, 0.0), 1040);
        assert!((w.re - 2f64.powi(-1040)).abs() <= 2f64.powi(-1074));
    }

    #[test]
    fn minimal_p_example() {
        let h = 2f64.powi(-14);
        assert!(!defino_holds(3376, h, 7));
        assert!(defino_holds(3377, h, 7));
        assert_eq!(minimal_p(h, 7), 3377);
    }

    #[test]
    fn monomial_exponent_example() {
        let h = 2f64.powi(-12);
        let mut n = 0u64;
        let mut acc = 1.0f64;
        while acc >= 0.5 {
            acc *= 1.0 - h;
            n += 1;
        }
        // ln 2 / -ln(1 - 2^-12) = 2838.78..., so 2839 is already enough
        assert_eq!(n, 2839);
        assert_eq!(minimal_monomial_exponent(h), 2839);
        assert_eq!((LN_2 / -(1.0 - h).ln()).ceil() as u64, 2839);
        assert!(half_power_holds(2840, h));
    }

    #[test]
    fn slow_spec_for_square_root_rate() {
        let spec = build_slow_blaschke(&square_delta(), 24).unwrap();
        for n in 6..=24 {
            assert_eq!(spec.h_log2[(n - 6) as usize], 2 * n + 2, "n = {n}");
        }
        assert!(spec.check_invariants().unwrap().all());
        assert_eq!(spec.eval(c(0.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn truncated_product_separates_annuli() {
        let spec = build_slow_blaschke(&square_delta(), 12).unwrap();
        let r6 = spec.r(6);
        let v = spec.eval(Complex64::from_polar(r6, 0.4)).norm();
        assert!(v <= radius_power(r6, spec.n_monomial) && v < 0.5);
        for k in 7..=12 {
            let rad = 0.5 * (spec.r(k - 1) + spec.r(k));
            for j in 0..16 {
                let z = Complex64::from_polar(rad, j as f64 * 0.39);
                assert!(spec.eval(z).norm() <= 1.0 - 2f64.powi(-(k as i32)));
                assert!(spec.certificate_margin(z).unwrap() >= -1e-12);
            }
        }
    }

    #[test]
    fn spec_file_round_trip() {
        let spec = build_slow_blaschke(&square_delta(), 10).unwrap();
        let json = serde_json::to_string(&spec.to_file()).unwrap();
        let back: SlowSpecFile = serde_json::from_str(&json).unwrap();
        let spec2 = SlowBlaschkeSpec::from_file(&back).unwrap();
        assert_eq!(spec2.p, spec.p);
        assert_eq!(spec2.n_monomial, spec.n_monomial);
        let z = c(0.3, 0.9);
        assert_eq!(spec.eval(z), spec2.eval(z));
    }

    #[test]
    fn too_slow_rate_hits_resolution_floor() {
        let d = DecayFunction::user("slow", true, |t: f64| (0.5 / (1.0 - t.ln())).min(0.5));
        match build_slow_blaschke(&d, 24) {
            Err(Error::ResolutionFloor(_)) => {}
            other => panic!("expected resolution floor, got {other:?}"),
        }
    }

    #[test]
    fn pseudo_hyperbolic_examples() {
        assert!((pseudo_hyperbolic(c(0.3, 0.4), c(0.0, 0.0)) - 0.5).abs() < 1e-15);
        assert_eq!(pseudo_hyperbolic(c(0.2, 0.1), c(0.2, 0.1)), 0.0);
        assert!((pseudo_hyperbolic(c(0.5, 0.0), c(-0.5, 0.0)) - 0.8).abs() < 1e-15);
    }
}
