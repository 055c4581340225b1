use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use compop::blaschke::{minimal_monomial_exponent, minimal_p, pseudo_hyperbolic, EquidistributedFactor};
use compop::carleson::dyadic_index;
use compop::compactness::delta_ratio;
use compop::harmonic::barrier::upper_bound;
use compop::harmonic::domain::Shape;
use compop::harmonic::{b, bracket_index, PlanarDomain};
use compop::orlicz::OrliczFunction;

fn disk_point(max: f64) -> impl Strategy<Value = Complex64> {
    (0.0..max, 0.0..2.0 * PI).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

proptest! {
    #[test]
    fn blaschke_factor_obeys_bound_on_its_circle(p in 1u64..40, r in 0.05f64..0.97, t in 0.0..2.0 * PI) {
        let f = EquidistributedFactor::new(p, r).unwrap();
        let z = Complex64::from_polar(r, t);
        let rp = r.powi(p as i32);
        let bound = 2.0 * rp / (1.0 + rp * rp);
        prop_assert!(f.eval_product(z).norm() <= bound + 1e-12);
        // the closed form and the product agree
        prop_assert!((f.eval(z) - f.eval_product(z)).norm() < 1e-9);
    }

    #[test]
    fn pseudo_hyperbolic_is_a_metric(u in disk_point(0.999), v in disk_point(0.999), w in disk_point(0.999)) {
        let d = pseudo_hyperbolic;
        prop_assert!(d(u, v) < 1.0);
        prop_assert!((d(u, v) - d(v, u)).abs() < 1e-12);
        prop_assert!(d(u, w) <= d(u, v) + d(v, w) + 1e-12);
        prop_assert_eq!(d(u, u), 0.0);
    }

    #[test]
    fn minimal_p_is_minimal(k in 1u32..40, n in 7u32..30) {
        let h = 2f64.powi(-(k as i32));
        let p = minimal_p(h, n);
        let holds = |p: u64| (p as f64 * h).powi(2) / (2.0 * std::f64::consts::E) > 2f64.powi(-(n as i32));
        prop_assert!(holds(p));
        prop_assert!(p == 1 || !holds(p - 1));
    }

    #[test]
    fn monomial_exponent_is_minimal(k in 1u32..40) {
        let h = 2f64.powi(-(k as i32));
        let n = minimal_monomial_exponent(h);
        // N log(1/(1 - h)) crosses log 2 between N - 1 and N
        let step = -(-h).ln_1p();
        let ln2 = std::f64::consts::LN_2;
        prop_assert!(n as f64 * step > ln2 * (1.0 - 1e-12));
        prop_assert!((n - 1) as f64 * step <= ln2 * (1.0 + 1e-12));
    }

    #[test]
    fn orlicz_inverse_round_trips(p in 1.0f64..6.0, a in 1.0f64..3.0, y in 1e-6f64..1e12) {
        for psi in [OrliczFunction::power(p).unwrap(), OrliczFunction::exp_type(a).unwrap()] {
            let x = psi.inverse(y).unwrap();
            prop_assert!(psi.eval(x) >= y * (1.0 - 1e-12));
            // left-continuous: slightly smaller arguments fall short
            prop_assert!(psi.eval(x * (1.0 - 1e-9)) < y);
        }
    }

    #[test]
    fn delta_table_follows_convention(p in 1.0f64..4.0, hs in prop::collection::vec(1e-4f64..1.0, 1..8), scale in 0.0f64..1.0) {
        let psi = OrliczFunction::power(p).unwrap();
        let rhos: Vec<f64> = hs.iter().map(|h| h * scale).collect();
        let t = delta_ratio(&psi, &rhos, &hs).unwrap();
        for w in t.rows.windows(2) {
            prop_assert!(w[0].h >= w[1].h);
        }
        for r in &t.rows {
            if r.rho == 0.0 {
                prop_assert_eq!(r.delta, 0.0);
            } else {
                // power Psi: delta = (rho / h)^{1/p}
                prop_assert!((r.delta - (r.rho / r.h).powf(1.0 / p)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dyadic_bands_tile_the_circle(n in 1u32..20, t in -PI..PI) {
        let z = Complex64::from_polar(0.9, t);
        let j = dyadic_index(z, n);
        let width = 2.0 * PI / 2f64.powi(n as i32);
        let centre = j as f64 * width;
        let mut off = (t - centre).rem_euclid(2.0 * PI);
        if off > PI {
            off -= 2.0 * PI;
        }
        prop_assert!(j < 1 << n);
        prop_assert!(off.abs() <= width / 2.0 + 1e-12);
    }

    #[test]
    fn brackets_satisfy_their_inequality(h in 1e-7f64..0.039) {
        let n = bracket_index(h).unwrap();
        prop_assert!(b(n + 1) < 2.0 * h && 2.0 * h <= b(n));
    }

    #[test]
    fn upper_bound_dominates_estimate(paths in 1usize..1_000_000, frac in 0.0f64..1.0) {
        let hits = (paths as f64 * frac) as usize;
        let (p, _, upper) = upper_bound(hits, paths);
        prop_assert!(upper >= p);
        prop_assert!(upper > 0.0);
    }

    #[test]
    fn hyperbola_distance_is_attained_and_bounded(x0 in 0.05f64..2.0, z in disk_point(3.0)) {
        let z = z + Complex64::new(0.2, 0.5);
        let shape = Shape::Hyperbola { c: 0.0, xa: x0, xb: x0 + 1.5 };
        let (d, p) = shape.closest(z);
        prop_assert!(((z - p).norm() - d).abs() < 1e-9);
        prop_assert!(shape.lower_bound(z) <= d + 1e-12);
        // brute force over the arc
        let mut best = f64::INFINITY;
        for k in 0..=4000 {
            let x = x0 + 1.5 * k as f64 / 4000.0;
            best = best.min((z - Complex64::new(x, 1.0 / x)).norm());
        }
        prop_assert!(d <= best + 1e-9);
        prop_assert!(d >= best - 2e-3);
    }

    #[test]
    fn segment_and_arc_distances_bound_below(z in disk_point(2.0), t0 in 0.0f64..6.0, sweep in 0.1f64..3.0) {
        let arc = Shape::Arc { center: Complex64::new(0.0, 0.0), radius: 1.0, start: t0, sweep };
        let (d, p) = arc.closest(z);
        prop_assert!((p.norm() - 1.0).abs() < 1e-12);
        prop_assert!(arc.lower_bound(z) <= d + 1e-12);
        let seg = Shape::Segment { a: Complex64::new(-1.0, 0.5), b: Complex64::new(1.0, -0.5) };
        let (ds, ps) = seg.closest(z);
        prop_assert!(((z - ps).norm() - ds).abs() < 1e-12);
        prop_assert!(ds <= (z - Complex64::new(-1.0, 0.5)).norm() + 1e-12);
    }

    #[test]
    fn disk_arcs_cover_the_boundary(t in 0.0f64..2.0 * PI) {
        let d = PlanarDomain::disk_with_arcs(&[
            (0.0, 1.0, "a".to_string()),
            (1.0, 2.0, "b".to_string()),
            (3.0, 2.0 * PI - 3.0, "c".to_string()),
        ]);
        let z = Complex64::from_polar(1.0 - 1e-9, t);
        let near = d.nearest(z);
        prop_assert!(near.distance < 1e-8);
        let label = &d.pieces[near.piece].label;
        let expect = if t < 1.0 { "a" } else if t < 3.0 { "b" } else { "c" };
        // points within rounding of an arc boundary may go either way
        let edge = [0.0, 1.0, 3.0, 2.0 * PI].iter().any(|e| (t - e).abs() < 1e-6);
        prop_assert!(edge || label == expect, "t = {t}: {label} vs {expect}");
    }
}
