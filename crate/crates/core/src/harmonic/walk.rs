//! Walk-on-spheres sampling of Brownian exit points.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::domain::PlanarDomain;
use crate::error::{invalid, Error, Result};

pub const DEFAULT_TOL: f64 = 1e-4;
pub const STEP_CAP: u64 = 1_000_000;

/// Fraction of failed paths above which a run is rejected.
pub const NONTERMINATION_BUDGET: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub paths: usize,
    pub seed: u64,
    pub tol: f64,
    pub step_cap: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            paths: 10_000,
            seed: 7,
            tol: DEFAULT_TOL,
            step_cap: STEP_CAP,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1e-6..=1e-3).contains(&self.tol) {
            return Err(invalid(format!("absorption tolerance {} outside [1e-6, 1e-3]", self.tol)));
        }
        if self.paths == 0 {
            return Err(invalid("paths must be positive"));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer, used to derive sub-seeds.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-path generator: one ChaCha stream per path index, so results do not
/// depend on how paths are scheduled.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Exit target: a boundary piece or the escape radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Piece(usize),
    Far,
    NonTerminating,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exit {
    pub point: Complex64,
    pub target: Target,
    pub steps: u64,
}

impl Exit {
    pub fn label<'a>(&self, domain: &'a PlanarDomain) -> &'a str {
        match self.target {
            Target::Piece(i) => &domain.pieces[i].label,
            Target::Far => "far",
            Target::NonTerminating => "nonterminating",
        }
    }
}

/// Continues a walk from `z` with the given generator until absorption.
pub fn walk_from(
    domain: &PlanarDomain,
    mut z: Complex64,
    tol: f64,
    step_cap: u64,
    rng: &mut ChaCha8Rng,
) -> Exit {
    let mut steps = 0u64;
    loop {
        if let Some(r) = domain.far_radius {
            if z.norm() > r {
                return Exit { point: z, target: Target::Far, steps };
            }
        }
        let near = domain.nearest(z);
        if near.distance < tol {
            return Exit {
                point: near.point,
                target: Target::Piece(near.piece),
                steps,
            };
        }
        if steps >= step_cap {
            return Exit { point: z, target: Target::NonTerminating, steps };
        }
        steps += 1;
        let theta = rng.gen::<f64>() * 2.0 * PI;
        z += Complex64::from_polar(near.step, theta);
    }
}

/// Single exit with its own seed.
pub fn brownian_exit(domain: &PlanarDomain, a: Complex64, tol: f64, seed: u64) -> Result<Exit> {
    if !(1e-6..=1e-3).contains(&tol) {
        return Err(invalid(format!("absorption tolerance {tol} outside [1e-6, 1e-3]")));
    }
    if !domain.inside(a) {
        return Err(invalid(format!("start point {a} outside {}", domain.name)));
    }
    let mut rng = path_rng(seed, 0);
    let exit = walk_from(domain, a, tol, STEP_CAP, &mut rng);
    if exit.target == Target::NonTerminating {
        return Err(Error::NonTerminating { steps: STEP_CAP, start: a.to_string() });
    }
    Ok(exit)
}

#[derive(Debug, Clone)]
pub struct ExitSample {
    pub exits: Vec<Exit>,
    pub nonterminating: usize,
}

/// Exit points of `cfg.paths` independent walks from `a`.
pub fn exit_sample(domain: &PlanarDomain, a: Complex64, cfg: &WalkConfig) -> Result<ExitSample> {
    cfg.validate()?;
    if !domain.inside(a) {
        return Err(invalid(format!("start point {a} outside {}", domain.name)));
    }
    let exits: Vec<Exit> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(cfg.seed, k);
            walk_from(domain, a, cfg.tol, cfg.step_cap, &mut rng)
        })
        .collect();
    let nonterminating = exits
        .iter()
        .filter(|e| e.target == Target::NonTerminating)
        .count();
    if nonterminating as f64 > NONTERMINATION_BUDGET * cfg.paths as f64 {
        return Err(Error::NonTerminating {
            steps: cfg.step_cap,
            start: format!("{a} ({nonterminating} of {} paths)", cfg.paths),
        });
    }
    Ok(ExitSample { exits, nonterminating })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub label: String,
    pub estimate: f64,
    pub stderr: f64,
    pub hits: usize,
    pub paths: usize,
}

fn binomial(label: &str, hits: usize, paths: usize) -> MeasureEstimate {
    let p = hits as f64 / paths as f64;
    MeasureEstimate {
        label: label.to_string(),
        estimate: p,
        stderr: (p * (1.0 - p) / paths as f64).sqrt(),
        hits,
        paths,
    }
}

impl ExitSample {
    pub fn measure(&self, domain: &PlanarDomain, label: &str) -> MeasureEstimate {
        let hits = self.exits.iter().filter(|e| e.label(domain) == label).count();
        binomial(label, hits, self.exits.len())
    }

    /// Estimates for every label of the domain plus `far` and
    /// `nonterminating` when they occur; the counts partition the paths.
    pub fn distribution(&self, domain: &PlanarDomain) -> Vec<MeasureEstimate> {
        let mut labels = domain.labels();
        for extra in ["far", "nonterminating"] {
            if !labels.iter().any(|l| l == extra)
                && self.exits.iter().any(|e| e.label(domain) == extra)
            {
                labels.push(extra.to_string());
            }
        }
        labels.iter().map(|l| self.measure(domain, l)).collect()
    }

    pub fn mean_steps(&self) -> f64 {
        self.exits.iter().map(|e| e.steps as f64).sum::<f64>() / self.exits.len() as f64
    }
}

/// Fraction of walks from `a` exiting through pieces labelled `label`.
pub fn harmonic_measure(
    domain: &PlanarDomain,
    a: Complex64,
    label: &str,
    cfg: &WalkConfig,
) -> Result<MeasureEstimate> {
    Ok(exit_sample(domain, a, cfg)?.measure(domain, label))
}

/// Checks that points of `g0` sampled in its box lie in `g1`.
pub fn check_containment(g0: &PlanarDomain, g1: &PlanarDomain, count: usize, seed: u64) -> Result<usize> {
    let (x0, x1, y0, y1) = g0.sample_box;
    let mut rng = path_rng(derive_seed(seed, 0xC0), 0);
    let mut inside = 0;
    for _ in 0..count {
        let z = Complex64::new(rng.gen_range(x0..=x1), rng.gen_range(y0..=y1));
        if g0.inside(z) {
            inside += 1;
            if !g1.inside(z) {
                return Err(Error::Containment(format!(
                    "{z} lies in {} but not in {}",
                    g0.name, g1.name
                )));
            }
        }
    }
    Ok(inside)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleCheck {
    pub g0: String,
    pub g1: String,
    pub hole: Option<String>,
    /// Estimate of `omega_{G1}(a, boundary of G1 outside that of G0)`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// Estimate of `omega_{G0}(a, H)`.
    pub rhs: f64,
    pub rhs_stderr: f64,
    /// Paths where the `G1` exit leaves the boundary of `G0` although the
    /// `G0` exit missed the hole.
    pub violations: usize,
    pub paths: usize,
    pub containment_points: usize,
    pub pass: bool,
}

/// Coupled check of `omega_{G1}(a, dG1 \ dG0) <= omega_{G0}(a, H)`: each path
/// walks in `G0` to its exit and, with the same generator, continues in `G1`.
pub fn hole_principle_check(
    g0: &PlanarDomain,
    g1: &PlanarDomain,
    hole: Option<&str>,
    a: Complex64,
    cfg: &WalkConfig,
) -> Result<HoleCheck> {
    cfg.validate()?;
    let containment_points = check_containment(g0, g1, 10_000, cfg.seed)?;
    if !g0.inside(a) {
        return Err(invalid(format!("start point {a} outside {}", g0.name)));
    }
    let outcomes: Vec<(bool, bool, bool)> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(cfg.seed, k);
            let first = walk_from(g0, a, cfg.tol, cfg.step_cap, &mut rng);
            if first.target == Target::NonTerminating {
                return (false, false, true);
            }
            let f = hole.is_some_and(|h| first.label(g0) == h);
            let second = if f {
                walk_from(g1, first.point, cfg.tol, cfg.step_cap, &mut rng)
            } else {
                // the exit already lies on the common boundary
                let near = g1.nearest(first.point);
                if near.distance < cfg.tol {
                    first
                } else {
                    walk_from(g1, first.point, cfg.tol, cfg.step_cap, &mut rng)
                }
            };
            if second.target == Target::NonTerminating {
                return (false, f, true);
            }
            let e = match second.target {
                Target::Far => true,
                _ => g0.distance(second.point) > 2.0 * cfg.tol,
            };
            (e, f, false)
        })
        .collect();
    let failed = outcomes.iter().filter(|o| o.2).count();
    if failed as f64 > NONTERMINATION_BUDGET * cfg.paths as f64 {
        return Err(Error::NonTerminating {
            steps: cfg.step_cap,
            start: format!("{a} ({failed} coupled paths)"),
        });
    }
    let e_hits = outcomes.iter().filter(|o| o.0).count();
    let f_hits = outcomes.iter().filter(|o| o.1).count();
    let violations = outcomes.iter().filter(|o| o.0 && !o.1).count();
    let lhs = binomial("lhs", e_hits, cfg.paths);
    let rhs = binomial("rhs", f_hits, cfg.paths);
    let combined = (lhs.stderr.powi(2) + rhs.stderr.powi(2)).sqrt();
    Ok(HoleCheck {
        g0: g0.name.clone(),
        g1: g1.name.clone(),
        hole: hole.map(str::to_string),
        lhs: lhs.estimate,
        lhs_stderr: lhs.stderr,
        rhs: rhs.estimate,
        rhs_stderr: rhs.stderr,
        violations,
        paths: cfg.paths,
        containment_points,
        pass: violations == 0 && lhs.estimate <= rhs.estimate + 3.0 * combined,
    })
}

/// Harmonic measure of the arc `[t0, t1]` of the unit circle seen from `a`,
/// by Gauss-Legendre quadrature of the Poisson kernel.
pub fn poisson_arc_measure(a: Complex64, t0: f64, t1: f64) -> f64 {
    let kernel = |t: f64| {
        let e = Complex64::from_polar(1.0, t);
        (1.0 - a.norm_sqr()) / (e - a).norm_sqr() / (2.0 * PI)
    };
    crate::quadrature::adaptive(kernel, t0, t1, 1e-13).0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disk_exit_is_uniform_from_centre() {
        let d = PlanarDomain::disk();
        let cfg = WalkConfig { paths: 4000, seed: 1, ..WalkConfig::default() };
        let s = exit_sample(&d, c(0.0, 0.0), &cfg).unwrap();
        let mut t: Vec<f64> = s
            .exits
            .iter()
            .map(|e| e.point.arg().rem_euclid(2.0 * PI) / (2.0 * PI))
            .collect();
        t.sort_by(f64::total_cmp);
        let n = t.len() as f64;
        let ks = t
            .iter()
            .enumerate()
            .map(|(i, &u)| ((i as f64 + 1.0) / n - u).abs().max((u - i as f64 / n).abs()))
            .fold(0.0, f64::max);
        assert!(ks <= 2.0 / n.sqrt(), "KS = {ks}");
    }

    #[test]
    fn disk_exit_concentrates_near_start() {
        let d = PlanarDomain::disk();
        let cfg = WalkConfig { paths: 10_000, seed: 2, ..WalkConfig::default() };
        let s = exit_sample(&d, c(0.99, 0.0), &cfg).unwrap();
        let mean = s.exits.iter().map(|e| e.point.re).sum::<f64>() / s.exits.len() as f64;
        assert!(mean > 0.9);
    }

    #[test]
    fn strip_labels_partition() {
        let d = PlanarDomain::strip(1.0);
        let cfg = WalkConfig { paths: 2000, seed: 3, ..WalkConfig::default() };
        let s = exit_sample(&d, c(0.0, 0.3), &cfg).unwrap();
        let dist = s.distribution(&d);
        assert_eq!(dist.iter().map(|m| m.hits).sum::<usize>(), cfg.paths);
        // exit through the top from height 0.3 has probability 0.3
        let top = s.measure(&d, "top");
        assert!((top.estimate - 0.3).abs() <= 3.0 * top.stderr + 2e-4);
    }

    #[test]
    fn quarter_arc_from_centre() {
        let d = PlanarDomain::disk_with_arcs(&[
            (0.0, PI / 2.0, "q".into()),
            (PI / 2.0, 1.5 * PI, "rest".into()),
        ]);
        let cfg = WalkConfig { paths: 20_000, seed: 4, ..WalkConfig::default() };
        let m = harmonic_measure(&d, c(0.0, 0.0), "q", &cfg).unwrap();
        assert!((m.estimate - 0.25).abs() <= 3.0 * m.stderr);
    }

    #[test]
    fn poisson_oracle_closed_form() {
        // right half circle seen from a real point x: 1/2 + (2/pi) atan(x)
        for x in [0.0, 0.3, 0.5, -0.7] {
            let v = poisson_arc_measure(c(x, 0.0), -PI / 2.0, PI / 2.0);
            let exact = 0.5 + 2.0 / PI * (x as f64).atan();
            assert!((v - exact).abs() < 1e-12, "{x}: {v} vs {exact}");
        }
    }

    #[test]
    fn determinism_and_reject_outside_start() {
        let d = PlanarDomain::disk();
        let a = brownian_exit(&d, c(0.2, 0.1), 1e-4, 9).unwrap();
        let b = brownian_exit(&d, c(0.2, 0.1), 1e-4, 9).unwrap();
        assert_eq!(a, b);
        assert!(brownian_exit(&d, c(1.2, 0.0), 1e-4, 9).is_err());
        assert!(brownian_exit(&d, c(0.2, 0.0), 1e-2, 9).is_err());
    }

    #[test]
    fn half_disk_inside_disk_hole_principle() {
        let g0 = PlanarDomain::upper_half_disk();
        let g1 = PlanarDomain::disk();
        let cfg = WalkConfig { paths: 4000, seed: 5, ..WalkConfig::default() };
        let r = hole_principle_check(&g0, &g1, Some("diameter"), c(0.1, 0.4), &cfg).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.pass);
        assert!(r.lhs > 0.05 && r.lhs < r.rhs);
    }

    #[test]
    fn containment_failure_detected() {
        let g0 = PlanarDomain::disk();
        let g1 = PlanarDomain::upper_half_disk();
        let cfg = WalkConfig { paths: 10, ..WalkConfig::default() };
        let err = hole_principle_check(&g0, &g1, None, c(0.1, 0.4), &cfg).unwrap_err();
        assert!(matches!(err, Error::Containment(_)));
    }
}
