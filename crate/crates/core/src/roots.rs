//! Polynomial roots by simultaneous Aberth-Ehrlich iteration.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex polynomial with coefficients in ascending degree.
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Value and derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            d = d * z + p;
            p = p * z + c;
        }
        (p, d)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    pub fn scale(&self, s: Complex64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        Polynomial::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(zero)
                        - other.coeffs.get(k).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }
}

/// All roots of `poly`, each returned once per multiplicity (clusters are
/// not merged here).
pub fn aberth_roots(poly: &Polynomial) -> Result<Vec<Complex64>> {
    let n = poly.degree();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = poly.coeffs[n];
    let abs_max = poly.coeffs[..n]
        .iter()
        .map(|c| (c / lead).norm())
        .fold(0.0, f64::max);
    let cauchy = 1.0 + abs_max;
    let a0 = (poly.coeffs[0] / lead).norm();
    let radius = if a0 > 0.0 {
        a0.powf(1.0 / n as f64).clamp(1e-3, cauchy)
    } else {
        0.5f64.min(cauchy)
    };
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4))
        .collect();
    let mut converged = vec![false; n];
    for _ in 0..1000 {
        let mut all = true;
        for k in 0..n {
            if converged[k] {
                continue;
            }
            let (p, d) = poly.eval_with_derivative(z[k]);
            if p.norm() == 0.0 {
                converged[k] = true;
                continue;
            }
            let ratio = p / d;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    let diff = z[k] - z[j];
                    if diff.norm() > 0.0 {
                        s += 1.0 / diff;
                    }
                }
            }
            let corr = ratio / (1.0 - ratio * s);
            let corr = if corr.is_finite() { corr } else { ratio };
            z[k] -= corr;
            if corr.norm() <= 1e-15 * z[k].norm().max(1e-3) {
                converged[k] = true;
            } else {
                all = false;
            }
        }
        if all {
            return Ok(z);
        }
    }
    // multiple roots converge only linearly; accept when residuals are tiny
    let scale: f64 = poly.coeffs.iter().map(|c| c.norm()).sum();
    if z.iter().all(|&r| poly.eval(r).norm() <= 1e-10 * scale) {
        Ok(z)
    } else {
        Err(Error::NotConverged(format!(
            "Aberth iteration did not converge for degree {n}"
        )))
    }
}

/// A few Newton steps on a single root of `f`, stopping when the step stops
/// shrinking.
pub fn newton_polish<F>(f: F, mut z: Complex64, iters: usize) -> Complex64
where
    F: Fn(Complex64) -> (Complex64, Complex64),
{
    let mut last = f64::INFINITY;
    for _ in 0..iters {
        let (v, d) = f(z);
        if v.norm() == 0.0 || d.norm() == 0.0 {
            break;
        }
        let step = v / d;
        if !step.is_finite() || step.norm() >= last {
            break;
        }
        last = step.norm();
        z -= step;
        if last <= 1e-17 {
            break;
        }
    }
    z
}

/// Groups roots closer than `tol` and returns cluster centroids with their
/// sizes.
pub fn cluster_roots(roots: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![roots[i]];
        let mut grew = true;
        while grew {
            grew = false;
            for j in 0..roots.len() {
                if !used[j] && members.iter().any(|m| (m - roots[j]).norm() < tol) {
                    used[j] = true;
                    members.push(roots[j]);
                    grew = true;
                }
            }
        }
        let c = members.iter().sum::<Complex64>() / members.len() as f64;
        out.push((c, members.len()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quadratic_roots() {
        // z^2 - 0.25
        let p = Polynomial::new(vec![c(-0.25, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let mut r = aberth_roots(&p).unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((r[0] - c(-0.5, 0.0)).norm() < 1e-14);
        assert!((r[1] - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn roots_of_unity() {
        let n = 64;
        let mut coeffs = vec![c(0.0, 0.0); n + 1];
        coeffs[0] = c(-1.0, 0.0);
        coeffs[n] = c(1.0, 0.0);
        let p = Polynomial::new(coeffs);
        let r = aberth_roots(&p).unwrap();
        assert_eq!(r.len(), n);
        for z in &r {
            assert!((z.norm() - 1.0).abs() < 1e-13);
            assert!(p.eval(*z).norm() < 1e-12);
        }
    }

    #[test]
    fn double_root_clusters() {
        // (z - 0.3)^2 (z + 0.6)
        let a = Polynomial::new(vec![c(-0.3, 0.0), c(1.0, 0.0)]);
        let b = Polynomial::new(vec![c(0.6, 0.0), c(1.0, 0.0)]);
        let p = a.mul(&a).mul(&b);
        let r = aberth_roots(&p).unwrap();
        let cl = cluster_roots(&r, 1e-6);
        assert_eq!(cl.len(), 2);
        let double = cl.iter().find(|(_, m)| *m == 2).unwrap();
        assert!((double.0 - c(0.3, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn polynomial_arithmetic() {
        let a = Polynomial::new(vec![c(1.0, 0.0), c(2.0, 0.0)]);
        let b = Polynomial::new(vec![c(0.0, 1.0), c(1.0, 0.0)]);
        let p = a.mul(&b);
        let z = c(0.3, -0.7);
        assert!((p.eval(z) - a.eval(z) * b.eval(z)).norm() < 1e-15);
        let d = p.sub(&p);
        assert_eq!(d.degree(), 0);
        let (_, der) = p.eval_with_derivative(z);
        // p = 2z^2 + (1 + 2i) z + i
        assert!((der - (4.0 * z + c(1.0, 2.0))).norm() < 1e-15);
    }
}
