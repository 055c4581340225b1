//! Reference values computed independently of the library routines they
//! check.

use std::f64::consts::PI;

use num_complex::Complex64;

/// `prod_k (r - e^{-i theta_k} z) / (1 - r e^{-i theta_k} z)`, `theta_k =
/// 2 k pi / p`, multiplied out factor by factor.
pub fn blaschke_product(p: u64, r: f64, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for k in 1..=p {
        let e = Complex64::from_polar(1.0, -2.0 * PI * k as f64 / p as f64);
        acc *= (r - e * z) / (1.0 - r * e * z);
    }
    acc
}

/// `2 r^p / (1 + r^{2p})`.
pub fn lemma_bound(p: u64, r: f64) -> f64 {
    let rp = r.powi(p as i32);
    2.0 * rp / (1.0 + rp * rp)
}

/// `1 - (p h)^2 / (2e)` with `h = 1 - r`.
pub fn lemma_bound_b(p: u64, r: f64) -> f64 {
    let ph = p as f64 * (1.0 - r);
    1.0 - ph * ph / (2.0 * std::f64::consts::E)
}

/// `|u - v| / |1 - conj(u) v|`, written out.
pub fn pseudo_distance(u: Complex64, v: Complex64) -> f64 {
    let num = (u.re - v.re).hypot(u.im - v.im);
    let den = Complex64::new(1.0 - (u.re * v.re + u.im * v.im), -(u.re * v.im - u.im * v.re)).norm();
    num / den
}

/// `2 pi C(2N, N) / 4^N` by the running product `prod (2k - 1)/(2k)`.
pub fn wallis(n: u64) -> f64 {
    let mut c = 1.0;
    for k in 1..=n {
        c *= (2 * k - 1) as f64 / (2 * k) as f64;
    }
    2.0 * PI * c
}

/// Harmonic measure of the arc `[t0, t1]` seen from `a`, from the angle
/// the arc subtends: `omega = (2 Delta arg(e^{it} - a) - (t1 - t0)) / 2 pi`.
pub fn poisson_arc_closed_form(a: Complex64, t0: f64, t1: f64) -> f64 {
    let e0 = Complex64::from_polar(1.0, t0) - a;
    let e1 = Complex64::from_polar(1.0, t1) - a;
    let turn = (e1 / e0).arg().rem_euclid(2.0 * PI);
    (2.0 * turn - (t1 - t0)) / (2.0 * PI)
}

/// Disk arc whose image under `tau(z) = (1 + z)/(1 - z)` is `i[y0, y1]`,
/// returned as its normalized length.
pub fn pulled_back_arc(y0: f64, y1: f64) -> f64 {
    let inv = |w: Complex64| (w - 1.0) / (w + 1.0);
    let a0 = inv(Complex64::new(0.0, y0)).arg();
    let a1 = inv(Complex64::new(0.0, y1)).arg();
    // the image of i[y0, y1] runs clockwise from a0 to a1
    (a0 - a1).rem_euclid(2.0 * PI) / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wallis_small_values() {
        assert!((wallis(1) - PI).abs() < 1e-15);
        assert!((wallis(2) - 0.75 * PI).abs() < 1e-15);
    }

    #[test]
    fn arc_formulas_agree_at_centre() {
        let c = Complex64::new(0.0, 0.0);
        assert!((poisson_arc_closed_form(c, 0.3, 1.3) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        // i[0, inf) pulls back to the upper half circle
        assert!((pulled_back_arc(0.0, 1e15) - 0.5).abs() < 1e-12);
        assert!((pulled_back_arc(-1.0, 1.0) - 0.5).abs() < 1e-12);
    }
}
