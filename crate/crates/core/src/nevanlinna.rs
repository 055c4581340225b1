//! Nevanlinna counting functions and the area integrals built from them.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{pairwise_sum, GaussLegendre};
use crate::stats::partial_sums_diverge;
use crate::symbols::SymbolMap;

/// `N_phi(w)` together with the preimages it was summed over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingEvaluation {
    pub w: Complex64,
    pub value: f64,
    pub preimages: Vec<(Complex64, u32)>,
    /// `w = phi(0)`, a point the definition excludes; the sum is still
    /// reported.
    pub at_phi0: bool,
}

/// `N_phi(w) = sum_{phi(z) = w} log(1/|z|)` with multiplicity.
pub fn counting_function(phi: &SymbolMap, w: Complex64) -> Result<CountingEvaluation> {
    let preimages = phi.preimages(w)?;
    let value = preimages
        .iter()
        .map(|&(z, m)| if z.norm() == 0.0 { f64::INFINITY } else { m as f64 * -z.norm().ln() })
        .sum::<f64>();
    let phi0 = phi.eval_unchecked(Complex64::new(0.0, 0.0));
    Ok(CountingEvaluation {
        w,
        value,
        preimages,
        at_phi0: (phi0 - w).norm() <= 1e-14,
    })
}

fn n_value(phi: &SymbolMap, w: Complex64) -> Result<f64> {
    if !(w.norm() < 1.0) {
        return Ok(0.0);
    }
    let v = counting_function(phi, w)?.value;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NotConverged(format!(
            "counting function is infinite at the quadrature node {w}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowAverage {
    pub center: f64,
    pub h: f64,
    pub average: f64,
    pub level: usize,
    pub converged: bool,
}

/// Integral of `f` and of 1 over the lens `S(xi, h) ∩ D` at quadrature
/// level `q`, in polar coordinates about the origin.
///
/// The radial variable is `r = 1 - h + h s^2`, which absorbs the square-root
/// opening of the lens at its inner tip.
fn lens_integrals<F>(center: f64, h: f64, q: usize, f: &F) -> Result<(f64, f64)>
where
    F: Fn(Complex64) -> Result<f64> + Sync,
{
    let gl = GaussLegendre::new(q);
    let r0 = (1.0 - h).max(0.0);
    let cells: Vec<(f64, f64)> = gl
        .mapped(0.0, 1.0)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(s, ws)| {
            let r = r0 + (1.0 - r0) * s * s;
            let dr = 2.0 * (1.0 - r0) * s;
            let c = ((r * r + 1.0 - h * h) / (2.0 * r)).clamp(-1.0, 1.0);
            let alpha = c.acos();
            let mut inner = Vec::with_capacity(q);
            let mut area = 0.0;
            for (t, wt) in gl.mapped(-alpha, alpha) {
                let z = Complex64::from_polar(r, center + t);
                inner.push(wt * f(z)?);
                area += wt;
            }
            let jac = ws * dr * r / PI;
            Ok((jac * pairwise_sum(&inner), jac * area))
        })
        .collect::<Result<Vec<_>>>()?;
    let num: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let den: Vec<f64> = cells.iter().map(|c| c.1).collect();
    Ok((pairwise_sum(&num), pairwise_sum(&den)))
}

/// Average of `N_phi` over `S(xi, h) ∩ D` against normalized area, with
/// the quadrature level doubled until successive values agree to `1e-3`.
pub fn window_average(phi: &SymbolMap, center: f64, h: f64, level: usize) -> Result<WindowAverage> {
    if !(h >= 2f64.powi(-16) && h <= 1.0) {
        return Err(invalid(format!("window average needs 2^-16 <= h <= 1, got {h}")));
    }
    let f = |z: Complex64| n_value(phi, z);
    let mut q = level.max(4);
    let (num, den) = lens_integrals(center, h, q, &f)?;
    let mut prev = if den > 0.0 { num / den } else { 0.0 };
    loop {
        q *= 2;
        let (num, den) = lens_integrals(center, h, q, &f)?;
        let cur = if den > 0.0 { num / den } else { 0.0 };
        let change = (cur - prev).abs();
        let converged = change <= 1e-3 * cur.abs() || (cur == 0.0 && prev == 0.0);
        if converged || q >= 512 {
            return Ok(WindowAverage {
                center,
                h,
                average: cur,
                level: q,
                converged,
            });
        }
        prev = cur;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LueckingIntegral {
    pub p: f64,
    /// `k = 2..=depth`
    pub k: Vec<u32>,
    /// `int (N/log(1/|z|))^{p/2} (1 - |z|)^-2 dA`
    pub ratio_form: Vec<f64>,
    /// `int N^{p/2} (1 - |z|)^{-(p/2 + 2)} dA`
    pub proof_form: Vec<f64>,
    pub diverging_ratio: bool,
    pub diverging_proof: bool,
    pub converged: bool,
}

/// Both integrands over the band `1 - 2^-j <= |z| <= 1 - 2^-(j+1)`.
fn band_integrals(phi: &SymbolMap, p: f64, j: u32, nr: usize, nt: usize) -> Result<(f64, f64)> {
    let a = 1.0 - 2f64.powi(-(j as i32));
    let b = 1.0 - 2f64.powi(-(j as i32) - 1);
    let gl = GaussLegendre::new(nr);
    let nodes: Vec<(f64, f64)> = gl.mapped(a, b).collect();
    let cells: Vec<(f64, f64)> = nodes
        .into_par_iter()
        .map(|(r, wr)| {
            let one_minus = 1.0 - r;
            let log_inv = -r.ln();
            let mut ratio = Vec::with_capacity(nt);
            let mut proof = Vec::with_capacity(nt);
            for i in 0..nt {
                let z = Complex64::from_polar(r, 2.0 * PI * i as f64 / nt as f64);
                let n = n_value(phi, z)?;
                ratio.push((n / log_inv).powf(0.5 * p));
                proof.push(n.powf(0.5 * p));
            }
            // periodic trapezoid in theta, dA = r dr dtheta / pi
            let w = wr * r * (2.0 * PI / nt as f64) / PI;
            Ok((
                w * pairwise_sum(&ratio) / (one_minus * one_minus),
                w * pairwise_sum(&proof) / one_minus.powf(0.5 * p + 2.0),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let r: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let q: Vec<f64> = cells.iter().map(|c| c.1).collect();
    Ok((pairwise_sum(&r), pairwise_sum(&q)))
}

/// Cumulative integrals `I_k` over `1/2 <= |z| <= 1 - 2^-k`, `k = 2..=depth`.
pub fn luecking_integral(phi: &SymbolMap, p: f64, depth: u32) -> Result<LueckingIntegral> {
    if !(p > 0.0) {
        return Err(invalid(format!("Luecking exponent must be positive, got {p}")));
    }
    if !(2..=40).contains(&depth) {
        return Err(invalid(format!("annulus depth must lie in 2..=40, got {depth}")));
    }
    if !phi.has_preimages() {
        return Err(Error::NoSolver {
            kind: phi.id().to_string(),
        });
    }
    let mut ratio_bands = Vec::new();
    let mut proof_bands = Vec::new();
    let mut converged = true;
    for j in 1..depth {
        let (mut nr, mut nt) = (8usize, 32usize);
        let mut prev = band_integrals(phi, p, j, nr, nt)?;
        loop {
            nr *= 2;
            nt *= 2;
            let cur = band_integrals(phi, p, j, nr, nt)?;
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-3 * a.abs().max(b.abs()) || a == b;
            let ok = close(cur.0, prev.0) && close(cur.1, prev.1);
            if ok || nt >= 1024 {
                converged &= ok;
                ratio_bands.push(cur.0);
                proof_bands.push(cur.1);
                break;
            }
            prev = cur;
        }
    }
    let cumulative = |bands: &[f64]| {
        let mut acc = 0.0;
        bands
            .iter()
            .map(|b| {
                acc += b;
                acc
            })
            .collect::<Vec<f64>>()
    };
    let ratio_form = cumulative(&ratio_bands);
    let proof_form = cumulative(&proof_bands);
    Ok(LueckingIntegral {
        p,
        k: (2..=depth).collect(),
        diverging_ratio: partial_sums_diverge(&ratio_form),
        diverging_proof: partial_sums_diverge(&proof_form),
        ratio_form,
        proof_form,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubmeanCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `[N(a)]^q` against the disk average of `N^q` over `D(a, r)`.
pub fn submean_check(phi: &SymbolMap, a: Complex64, r: f64, q: f64) -> Result<SubmeanCheck> {
    if !(r > 0.0 && q > 0.0) {
        return Err(invalid("sub-mean check needs r > 0 and q > 0"));
    }
    if a.norm() + r >= 1.0 {
        return Err(invalid(format!("disk D({a}, {r}) is not inside the unit disk")));
    }
    if a.norm() <= r {
        return Err(invalid(format!("disk D({a}, {r}) contains the origin")));
    }
    let phi0 = phi.eval_unchecked(Complex64::new(0.0, 0.0));
    if (phi0 - a).norm() <= r {
        return Err(invalid(format!("disk D({a}, {r}) contains phi(0) = {phi0}")));
    }
    let lhs = n_value(phi, a)?.powf(q);
    let average = |nr: usize, nt: usize| -> Result<f64> {
        let gl = GaussLegendre::new(nr);
        let nodes: Vec<(f64, f64)> = gl.mapped(0.0, r).collect();
        let cells = nodes
            .into_par_iter()
            .map(|(rho, w)| {
                let mut ring = Vec::with_capacity(nt);
                for i in 0..nt {
                    let z = a + Complex64::from_polar(rho, 2.0 * PI * i as f64 / nt as f64);
                    ring.push(n_value(phi, z)?.powf(q));
                }
                Ok(w * rho * pairwise_sum(&ring) / nt as f64)
            })
            .collect::<Result<Vec<f64>>>()?;
        // (1 / (pi r^2)) * int_0^r 2 pi rho * ring-mean d rho
        Ok(2.0 * pairwise_sum(&cells) / (r * r))
    };
    let (mut nr, mut nt) = (16usize, 32usize);
    let mut prev = average(nr, nt)?;
    loop {
        nr *= 2;
        nt *= 2;
        let cur = average(nr, nt)?;
        if (cur - prev).abs() <= 1e-10 * cur.abs() || nt >= 1024 {
            let ratio = if cur > 0.0 { lhs / cur } else { f64::INFINITY };
            return Ok(SubmeanCheck {
                lhs,
                rhs: cur,
                ratio,
            });
        }
        prev = cur;
    }
}

/// `N_phi` on the points of a `g x g` grid over `[-1, 1]^2` that lie in the
/// disk, rows ordered by `y` then `x`.
pub fn counting_grid(phi: &SymbolMap, g: usize) -> Result<Vec<(f64, f64, f64)>> {
    if g < 2 {
        return Err(invalid("grid needs at least 2 points per side"));
    }
    let pts: Vec<(f64, f64)> = (0..g)
        .flat_map(|iy| {
            (0..g).map(move |ix| {
                let x = -1.0 + 2.0 * (ix as f64 + 0.5) / g as f64;
                let y = -1.0 + 2.0 * (iy as f64 + 0.5) / g as f64;
                (x, y)
            })
        })
        .filter(|&(x, y)| x * x + y * y < 1.0)
        .collect();
    pts.into_par_iter()
        .map(|(x, y)| Ok((x, y, counting_function(phi, Complex64::new(x, y))?.value)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blaschke::EquidistributedFactor;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn counting_examples() {
        let id = counting_function(&SymbolMap::identity(), c(0.5, 0.0)).unwrap();
        assert!((id.value - 2f64.ln()).abs() < 1e-15);
        let sq = counting_function(&SymbolMap::monomial(2).unwrap(), c(0.25, 0.0)).unwrap();
        assert!((sq.value - 4f64.ln()).abs() < 1e-14);
        let b = SymbolMap::finite_blaschke(vec![EquidistributedFactor::new(1, 0.5).unwrap()], 0.0)
            .unwrap();
        let v = counting_function(&b, c(0.0, 0.0)).unwrap();
        assert!((v.value - 2f64.ln()).abs() < 1e-13);
        assert!(counting_function(&SymbolMap::identity(), c(0.0, 0.0)).unwrap().at_phi0);
        assert!(counting_function(&SymbolMap::punctured(), c(0.1, 0.0)).is_err());
    }

    /// Reference lens average by a plain tensor midpoint rule in Cartesian
    /// coordinates.
    fn brute_lens_average(f: impl Fn(Complex64) -> f64, center: f64, h: f64, n: usize) -> f64 {
        let xi = Complex64::from_polar(1.0, center);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let z = xi + c(
                    -h + 2.0 * h * (i as f64 + 0.5) / n as f64,
                    -h + 2.0 * h * (j as f64 + 0.5) / n as f64,
                );
                if (z - xi).norm() <= h && z.norm() < 1.0 {
                    num += f(z);
                    den += 1.0;
                }
            }
        }
        num / den
    }

    #[test]
    fn window_average_matches_brute_force() {
        let w = window_average(&SymbolMap::identity(), 0.0, 0.1, 8).unwrap();
        assert!(w.converged);
        let reference = brute_lens_average(|z| -z.norm().ln(), 0.0, 0.1, 1500);
        assert!((w.average / reference - 1.0).abs() < 2e-3, "{} vs {reference}", w.average);
        let m = window_average(&SymbolMap::monomial(2).unwrap(), 0.0, 0.1, 8).unwrap();
        assert!((m.average / w.average - 1.0).abs() < 2e-3);
        let s = window_average(&SymbolMap::scaling(0.5).unwrap(), 0.0, 0.25, 8).unwrap();
        assert_eq!(s.average, 0.0);
    }

    #[test]
    fn identity_luecking_integral_matches_closed_form() {
        let li = luecking_integral(&SymbolMap::identity(), 2.0, 10).unwrap();
        let primitive = |r: f64| 2.0 * (1.0 / (1.0 - r) + (1.0 - r).ln());
        for (i, &k) in li.k.iter().enumerate() {
            let exact = primitive(1.0 - 2f64.powi(-(k as i32))) - primitive(0.5);
            assert!((li.ratio_form[i] / exact - 1.0).abs() < 1e-6, "k={k}");
        }
        assert!(li.diverging_ratio && li.diverging_proof);
        let sq = luecking_integral(&SymbolMap::monomial(2).unwrap(), 2.0, 10).unwrap();
        for (a, b) in sq.ratio_form.iter().zip(&li.ratio_form) {
            assert!((a / b - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn scaling_luecking_integral_vanishes() {
        let li = luecking_integral(&SymbolMap::scaling(0.5).unwrap(), 2.0, 8).unwrap();
        assert!(li.ratio_form.iter().all(|&v| v == 0.0));
        assert!(!li.diverging_ratio && !li.diverging_proof);
    }

    #[test]
    fn submean_examples() {
        let id = SymbolMap::identity();
        let one = submean_check(&id, c(0.5, 0.0), 0.2, 1.0).unwrap();
        assert!((one.ratio - 1.0).abs() < 1e-3);
        let two = submean_check(&id, c(0.5, 0.0), 0.2, 2.0).unwrap();
        assert!(two.ratio <= 1.0);
        let sq = submean_check(&SymbolMap::monomial(2).unwrap(), c(0.5, 0.0), 0.2, 1.0).unwrap();
        assert!((sq.ratio - one.ratio).abs() < 1e-9);
        assert!(submean_check(&id, c(0.1, 0.0), 0.2, 1.0).is_err());
        assert!(submean_check(&id, c(0.9, 0.0), 0.2, 1.0).is_err());
    }
}
