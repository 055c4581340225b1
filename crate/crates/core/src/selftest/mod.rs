//! The acceptance suite: fourteen checks against independent oracles, run
//! from the `selftest` subcommand and from the acceptance test target.

pub mod oracles;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blaschke::{build_slow_blaschke, minimal_p, pseudo_hyperbolic, EquidistributedFactor};
use crate::carleson::{build_pullback, test_function_norm};
use crate::compactness::{delta_ratio, dyadic_radii, geometric_grid, pointwise_ratios};
use crate::error::{Error, Result};
use crate::harmonic::walk::derive_seed;
use crate::harmonic::{
    bracket_midpoints, calibrate_chain, default_start, exit_sample, harmonic_measure,
    hole_principle_check, poisson_arc_measure, rho_bound_report, standard_triples, EpsScheme,
    PlanarDomain, WalkConfig,
};
use crate::io::to_json;
use crate::nevanlinna::{counting_function, luecking_integral};
use crate::orlicz::{delta_from_psi, OrliczFunction};
use crate::stats::Trend;
use crate::symbols::{SymbolMap, DEFAULT_EPS};

/// Criteria that cannot hold as stated; they are run and reported, but do
/// not decide the overall status.
pub const UNATTAINABLE: &[u32] = &[8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub attainable: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub criteria: Vec<Criterion>,
    /// All attainable criteria passed.
    pub pass: bool,
}

impl SelftestReport {
    fn new(seed: u64, criteria: Vec<Criterion>) -> Self {
        let pass = criteria.iter().all(|c| c.pass || !c.attainable);
        SelftestReport { seed, criteria, pass }
    }
}

struct Builder {
    id: u32,
    name: &'static str,
    metrics: BTreeMap<String, f64>,
    failures: Vec<String>,
}

impl Builder {
    fn new(id: u32, name: &'static str) -> Self {
        Builder {
            id,
            name,
            metrics: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    fn metric(&mut self, key: impl Into<String>, v: f64) {
        self.metrics.insert(key.into(), v);
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self, summary: String) -> Criterion {
        let pass = self.failures.is_empty();
        let mut detail = summary;
        if !pass {
            let shown: Vec<&String> = self.failures.iter().take(5).collect();
            detail.push_str(&format!(
                "; {} failure(s): {}",
                self.failures.len(),
                shown.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("; ")
            ));
        }
        Criterion {
            id: self.id,
            name: self.name.into(),
            pass,
            attainable: !UNATTAINABLE.contains(&self.id),
            detail,
            metrics: self.metrics,
        }
    }

    fn error(self, e: crate::Error) -> Criterion {
        let mut b = self;
        b.failures.push(format!("error: {e}"));
        b.finish(String::new())
    }
}

fn rng(seed: u64, id: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, id as u64))
}

fn random_disk_point(rng: &mut ChaCha8Rng, rmax: f64) -> Complex64 {
    let r = rmax * rng.gen::<f64>().sqrt();
    Complex64::from_polar(r, rng.gen::<f64>() * 2.0 * PI)
}

fn lemma_bound(seed: u64) -> Criterion {
    let mut b = Builder::new(1, "finite Blaschke factor bounds on |z| = r");
    let mut rng = rng(seed, 1);
    let (mut worst_a, mut worst_eq, mut worst_b, mut count_b) = (f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY, 0);
    for _ in 0..500 {
        let p = rng.gen_range(1..=20u64);
        let r = rng.gen_range(0.05..0.95);
        let z = Complex64::from_polar(r, rng.gen::<f64>() * 2.0 * PI);
        let f = EquidistributedFactor::new(p, r).expect("valid factor");
        let g = f.eval_product(z).norm();
        let bound = oracles::lemma_bound(p, r);
        worst_a = worst_a.max(g - bound);
        b.check(g <= bound + 1e-12, || format!("(a) p={p} r={r}: {g} > {bound}"));
        // z^p = -r^p
        let z_eq = Complex64::from_polar(r, PI / p as f64);
        let eq = (f.eval_product(z_eq).norm() - bound).abs();
        worst_eq = worst_eq.max(eq);
        b.check(eq <= 1e-10, || format!("equality p={p} r={r}: off by {eq}"));
        // part (b) on its admissible range
        let lo = (1.0 - 0.5 / p as f64).max(0.05);
        if lo < 0.95 {
            let rb = rng.gen_range(lo..0.95);
            let zb = Complex64::from_polar(rb, rng.gen::<f64>() * 2.0 * PI);
            let fb = EquidistributedFactor::new(p, rb).expect("valid factor");
            let gb = fb.eval_product(zb).norm();
            let bb = oracles::lemma_bound_b(p, rb);
            count_b += 1;
            worst_b = worst_b.max(gb - bb);
            b.check(gb <= bb + 1e-12, || format!("(b) p={p} r={rb}: {gb} > {bb}"));
        }
        if p as f64 * (1.0 - r) <= 0.5 {
            let bb = oracles::lemma_bound_b(p, r);
            count_b += 1;
            b.check(g <= bb + 1e-12, || format!("(b) p={p} r={r}: {g} > {bb}"));
        }
    }
    b.metric("max_excess_a", worst_a);
    b.metric("max_equality_gap", worst_eq);
    b.metric("max_excess_b", worst_b);
    b.metric("samples_b", count_b as f64);
    b.finish(format!(
        "500 samples, max |G| - bound = {worst_a:.3e}, equality gap {worst_eq:.3e}, {count_b} part (b) samples"
    ))
}

fn closed_form(seed: u64) -> Criterion {
    let mut b = Builder::new(2, "closed form against the factor product");
    let mut rng = rng(seed, 2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = rng.gen_range(1..=50u64);
        let r = rng.gen_range(0.01..0.99);
        let z = random_disk_point(&mut rng, 0.999);
        let f = EquidistributedFactor::new(p, r).expect("valid factor");
        let dev = (f.eval(z) - oracles::blaschke_product(p, r, z)).norm();
        worst = worst.max(dev);
        b.check(dev <= 1e-9, || format!("p={p} r={r} z={z}: {dev}"));
    }
    b.metric("max_deviation", worst);
    b.finish(format!("200 factors, max deviation {worst:.3e}"))
}

fn certificate(seed: u64) -> Criterion {
    let mut b = Builder::new(3, "slow Blaschke certificate and spec invariants");
    let psi = OrliczFunction::power(2.0).expect("valid psi");
    let delta = delta_from_psi(&psi);
    let spec = match build_slow_blaschke(&delta, 24) {
        Ok(s) => s,
        Err(e) => return b.error(e),
    };
    match spec.check_invariants() {
        Ok(inv) => b.check(inv.all(), || format!("invariants {inv:?}")),
        Err(e) => return b.error(e),
    }
    let p7 = minimal_p(2f64.powi(-14), 7);
    b.metric("p7_h14", p7 as f64);
    b.check(p7 == 3377, || format!("p_7 = {p7}, expected 3377"));
    let mut rng = rng(seed, 3);
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let u = rng.gen_range(1.0..23.0);
        let z = Complex64::from_polar(1.0 - 2f64.powf(-u), rng.gen::<f64>() * 2.0 * PI);
        match spec.certificate_margin(z) {
            Ok(m) => {
                worst = worst.min(m);
                b.check(m >= -1e-12, || format!("z={z}: margin {m}"));
            }
            Err(e) => return b.error(e),
        }
    }
    b.metric("min_margin", worst);
    b.metric("n_monomial", spec.n_monomial as f64);
    b.finish(format!("10^4 samples, min margin {worst:.3e}, p_7 = {p7}"))
}

fn triangle(seed: u64) -> Criterion {
    let mut b = Builder::new(4, "strong triangle inequality");
    let mut rng = rng(seed, 4);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let (x, y, z) = (
            random_disk_point(&mut rng, 0.9999),
            random_disk_point(&mut rng, 0.9999),
            random_disk_point(&mut rng, 0.9999),
        );
        let dab = pseudo_hyperbolic(x, y);
        let (dac, dcb) = (pseudo_hyperbolic(x, z), pseudo_hyperbolic(z, y));
        let rhs = (dac + dcb) / (1.0 + dac * dcb);
        worst = worst.max(dab - rhs);
        b.check(dab <= rhs + 1e-12, || format!("{x}, {y}, {z}: {dab} > {rhs}"));
        let reference = oracles::pseudo_distance(x, y);
        b.check((dab - reference).abs() <= 1e-12, || format!("distance {dab} vs {reference}"));
    }
    b.metric("max_excess", worst);
    b.finish(format!("10^4 triples, max excess {worst:.3e}"))
}

fn identity_pullback() -> Criterion {
    let mut b = Builder::new(5, "identity pullback rho(h) = h/pi");
    let sample = match build_pullback(&SymbolMap::identity(), 1 << 14, DEFAULT_EPS) {
        Ok(s) => s,
        Err(e) => return b.error(e),
    };
    for h in [0.2, 0.1, 0.05] {
        match sample.rho(h) {
            Ok(est) => {
                let diff = (est.rho - h / PI).abs();
                b.metric(format!("rho_{h}"), est.rho);
                b.check(diff <= 3.0 * est.stderr, || format!("h={h}: |{} - h/pi| = {diff} > 3 * {}", est.rho, est.stderr));
            }
            Err(e) => return b.error(e),
        }
    }
    b.finish("M = 2^14, h in {0.2, 0.1, 0.05}".into())
}

fn nevanlinna_identity(seed: u64) -> Criterion {
    let mut b = Builder::new(6, "counting function of z^k");
    let mut rng = rng(seed, 6);
    let mut worst = 0.0f64;
    for k in 1..=3 {
        let phi = SymbolMap::monomial(k).expect("monomial");
        for _ in 0..100 {
            let w = Complex64::from_polar(rng.gen_range(0.01..0.99), rng.gen::<f64>() * 2.0 * PI);
            match counting_function(&phi, w) {
                Ok(n) => {
                    let err = (n.value - (1.0 / w.norm()).ln()).abs();
                    worst = worst.max(err);
                    b.check(err <= 1e-10, || format!("k={k} w={w}: error {err}"));
                }
                Err(e) => return b.error(e),
            }
        }
    }
    b.metric("max_error", worst);
    b.finish(format!("300 evaluations, max error {worst:.3e}"))
}

fn closed_range() -> Criterion {
    let mut b = Builder::new(7, "closed-range test");
    let hs = [0.2, 0.1, 0.05, 0.025];
    let symbols = [
        ("identity", SymbolMap::identity(), true),
        ("z^2", SymbolMap::monomial(2).expect("monomial"), true),
        ("scaling 0.5", SymbolMap::scaling(0.5).expect("scaling"), false),
    ];
    for (name, phi, expect) in symbols {
        let res = build_pullback(&phi, 1 << 14, DEFAULT_EPS).and_then(|s| s.closed_range_test(&hs, None));
        match res {
            Ok(cr) => {
                b.metric(format!("c_est {name}"), cr.c_est);
                if expect {
                    b.check(cr.consistent && cr.c_est >= 0.9 / PI && cr.c_est <= 1.1 / PI, || {
                        format!("{name}: c_est = {}, verdict {}", cr.c_est, cr.verdict)
                    });
                } else {
                    b.check(!cr.consistent && cr.c_est == 0.0, || format!("{name}: c_est = {}", cr.c_est));
                }
            }
            Err(e) => return b.error(e),
        }
    }
    b.finish("identity and z^2 in [0.9/pi, 1.1/pi], scaling 0.5 gives 0".into())
}

fn test_functions() -> Criterion {
    let mut b = Builder::new(8, "test-function norms");
    let mut worst = 0.0f64;
    for n in 1..=30 {
        match test_function_norm(n, 2.0) {
            Ok(v) => {
                let err = (v - oracles::wallis(n)).abs();
                worst = worst.max(err);
                b.check(err <= 1e-8, || format!("N={n}: |{v} - wallis| = {err}"));
            }
            Err(e) => return b.error(e),
        }
    }
    let mut min_scaled = f64::INFINITY;
    let mut below = Vec::new();
    for n in 1..=1000u64 {
        match test_function_norm(n, 2.0) {
            Ok(v) => {
                let s = v * (n as f64).sqrt();
                min_scaled = min_scaled.min(s);
                if s < 3.5 {
                    below.push(n);
                }
            }
            Err(e) => return b.error(e),
        }
    }
    b.metric("max_wallis_error", worst);
    b.metric("min_value_sqrt_n", min_scaled);
    b.metric("count_below_3.5", below.len() as f64);
    let listed = below.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
    b.check(below.is_empty(), || format!("value*sqrt(N) < 3.5 for N in {{{listed}}}"));
    b.finish(format!(
        "Wallis error {worst:.3e} for N <= 30; min value*sqrt(N) = {min_scaled:.6} over N <= 1000"
    ))
}

fn luecking_agreement() -> Criterion {
    let mut b = Builder::new(9, "Luecking sums against Luecking integrals");
    let symbols = [
        ("scaling 0.5", SymbolMap::scaling(0.5).expect("scaling")),
        ("identity", SymbolMap::identity()),
        ("z^2", SymbolMap::monomial(2).expect("monomial")),
    ];
    let mut agreed = 0;
    for (name, phi) in symbols {
        let sample = match build_pullback(&phi, 1 << 14, DEFAULT_EPS) {
            Ok(s) => s,
            Err(e) => return b.error(e),
        };
        for p in [1.0, 2.0, 4.0] {
            let sum = match sample.luecking_sum(p, 10) {
                Ok(s) => s,
                Err(e) => return b.error(e),
            };
            let integral = match luecking_integral(&phi, p, 10) {
                Ok(i) => i,
                Err(e) => return b.error(e),
            };
            let ok = sum.diverging == integral.diverging_ratio;
            agreed += ok as u32;
            b.metric(format!("{name} p={p} sum_diverges"), sum.diverging as u8 as f64);
            b.check(ok, || {
                format!("{name} p={p}: sum diverges {} vs integral {}", sum.diverging, integral.diverging_ratio)
            });
        }
    }
    b.finish(format!("{agreed}/9 cases agree"))
}

fn disk_harmonic(seed: u64) -> Criterion {
    let mut b = Builder::new(10, "harmonic measure in the disk");
    let weights: Vec<f64> = (1..=10).map(|k| k as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut arcs = Vec::new();
    let mut start = 0.0;
    for (k, w) in weights.iter().enumerate() {
        let sweep = 2.0 * PI * w / total;
        arcs.push((start, sweep, format!("arc{k}")));
        start += sweep;
    }
    let disk = PlanarDomain::disk_with_arcs(&arcs);
    let cfg = WalkConfig { paths: 100_000, seed: derive_seed(seed, 10), ..WalkConfig::default() };
    let sample = match exit_sample(&disk, Complex64::new(0.0, 0.0), &cfg) {
        Ok(s) => s,
        Err(e) => return b.error(e),
    };
    let mut total_hits = 0;
    for (t0, sweep, label) in &arcs {
        let m = sample.measure(&disk, label);
        total_hits += m.hits;
        let exact = sweep / (2.0 * PI);
        let _ = t0;
        b.check((m.estimate - exact).abs() <= 3.0 * m.stderr, || {
            format!("{label}: {} vs {exact} (stderr {})", m.estimate, m.stderr)
        });
    }
    b.check(total_hits == cfg.paths, || format!("labels cover {total_hits} of {} paths", cfg.paths));
    // Poisson oracle for the right half circle
    let half = PlanarDomain::disk_with_arcs(&[
        (-PI / 2.0, PI, "right".into()),
        (PI / 2.0, PI, "left".into()),
    ]);
    let starts = [
        (Complex64::new(0.5, 0.0), 100_000),
        (Complex64::new(0.3, 0.0), 50_000),
        (Complex64::new(0.0, 0.5), 50_000),
        (Complex64::new(-0.7, 0.0), 50_000),
    ];
    for (k, (a, paths)) in starts.into_iter().enumerate() {
        let cfg = WalkConfig { paths, seed: derive_seed(seed, 100 + k as u64), ..WalkConfig::default() };
        let m = match harmonic_measure(&half, a, "right", &cfg) {
            Ok(m) => m,
            Err(e) => return b.error(e),
        };
        let quad = poisson_arc_measure(a, -PI / 2.0, PI / 2.0);
        let closed = oracles::poisson_arc_closed_form(a, -PI / 2.0, PI / 2.0);
        b.metric(format!("poisson {a}"), m.estimate);
        b.check((quad - closed).abs() <= 1e-10, || format!("quadrature {quad} vs closed form {closed}"));
        b.check((m.estimate - quad).abs() <= 3.0 * m.stderr, || {
            format!("a={a}: {} vs Poisson {quad} (stderr {})", m.estimate, m.stderr)
        });
    }
    // conformal invariance: right half-plane from tau(0) = 1
    let (y0, y1) = (-0.5, 2.0);
    let plane = PlanarDomain::half_plane(y0, y1, 1e6);
    let cfg = WalkConfig { paths: 50_000, seed: derive_seed(seed, 110), ..WalkConfig::default() };
    match harmonic_measure(&plane, Complex64::new(1.0, 0.0), "target", &cfg) {
        Ok(m) => {
            let pulled = oracles::pulled_back_arc(y0, y1);
            b.metric("half_plane", m.estimate);
            b.check((m.estimate - pulled).abs() <= 3.0 * m.stderr, || {
                format!("half-plane: {} vs pulled-back arc {pulled}", m.estimate)
            });
        }
        Err(e) => return b.error(e),
    }
    b.finish("10 arcs x 10^5 paths from 0; Poisson at 0.5, 0.3, 0.5i, -0.7; half-plane image".into())
}

fn hole_principle(seed: u64) -> Criterion {
    let mut b = Builder::new(11, "hole principle, coupled");
    let triples = match standard_triples(3, 0.99) {
        Ok(t) => t,
        Err(e) => return b.error(e),
    };
    for (k, t) in triples.iter().enumerate() {
        let cfg = WalkConfig { paths: 20_000, seed: derive_seed(seed, 200 + k as u64), ..WalkConfig::default() };
        match hole_principle_check(&t.g0, &t.g1, t.hole.as_deref(), t.start, &cfg) {
            Ok(r) => {
                b.metric(format!("{} lhs", r.g0), r.lhs);
                b.metric(format!("{} rhs", r.g0), r.rhs);
                b.check(r.pass && r.violations == 0, || {
                    format!("{} in {}: lhs {} rhs {} violations {}", r.g0, r.g1, r.lhs, r.rhs, r.violations)
                });
            }
            Err(e) => return b.error(e),
        }
    }
    b.finish("slit disk, disk against itself, Omega_3 in Omega through H_3".into())
}

fn calibration_chain(seed: u64) -> Criterion {
    let mut b = Builder::new(12, "barrier calibration and decay chain");
    let cfg = WalkConfig { paths: 40_000, seed: derive_seed(seed, 12), ..WalkConfig::default() };
    let run = match calibrate_chain(8, &EpsScheme::Exp, default_start(), &cfg) {
        Ok(r) => r,
        Err(e) => return b.error(e),
    };
    for cal in &run.calibrations {
        b.check(cal.upper <= cal.eps && cal.monotone, || {
            format!("n={}: upper {} vs eps {}", cal.n, cal.upper, cal.eps)
        });
    }
    let hs = bracket_midpoints(8);
    match rho_bound_report(&run, &hs, None) {
        Ok(rep) => {
            let c = rep.fitted_c.unwrap_or(f64::NAN);
            let (lo, hi) = (0.8 / (8.0 * PI), 1.2 / (4.0 * PI));
            b.metric("fitted_c", c);
            b.check(c >= lo && c <= hi, || format!("c = {c} outside [{lo}, {hi}]"));
            for (row, k) in rep.rows.iter().zip(1..) {
                b.check(row.n == k, || format!("h = {} bracketed by {} instead of {k}", row.h, row.n));
            }
        }
        Err(e) => return b.error(e),
    }
    // the Psi-driven choice, Psi(x) = x^2
    let psi = OrliczFunction::power(2.0).expect("valid psi");
    let scheme = EpsScheme::Psi(psi.clone());
    let pcfg = WalkConfig { seed: derive_seed(seed, 13), ..cfg };
    let prun = match calibrate_chain(4, &scheme, default_start(), &pcfg) {
        Ok(r) => r,
        Err(e) => return b.error(e),
    };
    match rho_bound_report(&prun, &bracket_midpoints(4), Some(&psi)) {
        Ok(rep) => {
            for row in &rep.rows {
                let d = row.delta_bound.unwrap_or(f64::NAN);
                b.check(row.delta_bound_ok == Some(true), || format!("n={}: Delta bound {d} > 1/n", row.n));
            }
        }
        Err(e) => return b.error(e),
    }
    let mut worst = 0.0f64;
    for n in 1..=8 {
        match scheme.eps(n).and_then(|eps| Ok(psi.inverse(2.0 / crate::harmonic::b(n + 1))? / psi.inverse(1.0 / eps)?)) {
            Ok(d) => {
                worst = worst.max(d * n as f64);
                b.check(d <= 1.0 / n as f64, || format!("n={n}: Delta bound {d} > 1/n"));
            }
            Err(e) => return b.error(e),
        }
    }
    b.metric("max_n_times_delta_bound", worst);
    b.finish(format!(
        "8 calibrated barriers at 4 * 10^4 paths; Psi scheme calibrated for n <= 4, ratio checked for n <= 8"
    ))
}

fn separation() -> Criterion {
    let mut b = Builder::new(13, "pointwise condition against compactness");
    let psi = OrliczFunction::power(2.0).expect("valid psi");
    let spec = match build_slow_blaschke(&delta_from_psi(&psi), 24) {
        Ok(s) => s,
        Err(e) => return b.error(e),
    };
    let phi = SymbolMap::slow(spec);
    let pointwise = match pointwise_ratios(&phi, &psi, &dyadic_radii(20)) {
        Ok(p) => p,
        Err(e) => return b.error(e),
    };
    let hs = geometric_grid(0.25, 2.0, 10).expect("grid");
    let delta = match build_pullback(&phi, 1 << 16, DEFAULT_EPS)
        .and_then(|s| s.rho_table(&hs))
        .and_then(|rho| delta_ratio(&psi, &rho.iter().map(|r| r.rho).collect::<Vec<_>>(), &hs))
    {
        Ok(d) => d,
        Err(e) => return b.error(e),
    };
    let last = pointwise.rows.last().map(|r| r.orlicz).unwrap_or(f64::NAN);
    b.metric("orlicz_ratio_last", last);
    b.metric("delta_last", delta.rows.last().map(|r| r.delta).unwrap_or(f64::NAN));
    b.check(pointwise.orlicz_trend == Trend::ToZero, || format!("Orlicz ratio trend {}", pointwise.orlicz_trend));
    b.check(delta.trend == Trend::BoundedAway, || format!("Delta trend {}", delta.trend));
    b.finish(format!(
        "Orlicz ratio {}, Delta {}",
        pointwise.orlicz_trend, delta.trend
    ))
}

/// Criteria 1 to 13.
pub fn run_suite(seed: u64) -> SelftestReport {
    let criteria = vec![
        lemma_bound(seed),
        closed_form(seed),
        certificate(seed),
        triangle(seed),
        identity_pullback(),
        nevanlinna_identity(seed),
        closed_range(),
        test_functions(),
        luecking_agreement(),
        disk_harmonic(seed),
        hole_principle(seed),
        calibration_chain(seed),
        separation(),
    ];
    SelftestReport::new(seed, criteria)
}

/// Runs the suite twice and adds criterion 14: both serializations are
/// byte-identical.
pub fn run_with_determinism(seed: u64) -> Result<SelftestReport> {
    // the second run uses a different worker count; output must not move
    let first = run_suite(seed);
    let workers = if rayon::current_num_threads() == 2 { 3 } else { 2 };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let second = pool.install(|| run_suite(seed));
    let (a, b) = (to_json(&first)?, to_json(&second)?);
    let mut criteria = first.criteria;
    let mut metrics = BTreeMap::new();
    metrics.insert("bytes".to_string(), a.len() as f64);
    criteria.push(Criterion {
        id: 14,
        name: "determinism".into(),
        pass: a == b,
        attainable: true,
        detail: if a == b {
            format!("runs with {} and {workers} workers serialize identically", rayon::current_num_threads())
        } else {
            format!("runs with {} and {workers} workers differ", rayon::current_num_threads())
        },
        metrics,
    });
    Ok(SelftestReport::new(seed, criteria))
}
