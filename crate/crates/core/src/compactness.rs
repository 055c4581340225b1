//! Compactness and Schatten-class diagnostics assembled from Orlicz ratios,
//! Carleson data and Nevanlinna data.
//!
//! Every verdict here is a finite-resolution heuristic; reports carry a
//! banner saying so.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::carleson::{build_pullback, LueckingSums, PullbackSample, RhoEstimate};
use crate::error::{invalid, Result};
use crate::harmonic::RhoBoundReport;
use crate::nevanlinna::{luecking_integral, LueckingIntegral};
use crate::orlicz::OrliczFunction;
use crate::stats::{classify_trend, linear_fit, Trend};
use crate::symbols::SymbolMap;

pub const BANNER: &str = "numerical evidence, not proof";

/// Angular grid size for the pointwise ratios.
pub const ANGULAR_GRID: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub h: f64,
    pub rho: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub psi: String,
    /// Ordered by decreasing `h`.
    pub rows: Vec<DeltaRow>,
    pub trend: Trend,
}

/// `Delta(h) = Psi^{-1}(1/h) / Psi^{-1}(1/rho(h))`, with `Delta = 0` exactly
/// when `rho = 0`.
pub fn delta_ratio(psi: &OrliczFunction, rhos: &[f64], hs: &[f64]) -> Result<DeltaTable> {
    if rhos.len() != hs.len() {
        return Err(invalid("rho and h lists differ in length"));
    }
    let mut rows = Vec::with_capacity(hs.len());
    for (&h, &rho) in hs.iter().zip(rhos) {
        if !(h > 0.0 && h <= 1.0) || !(0.0..=1.0).contains(&rho) {
            return Err(invalid(format!("bad row h = {h}, rho = {rho}")));
        }
        let delta = if rho == 0.0 {
            0.0
        } else {
            psi.inverse(1.0 / h)? / psi.inverse(1.0 / rho)?
        };
        rows.push(DeltaRow { h, rho, delta });
    }
    rows.sort_by(|a, b| b.h.total_cmp(&a.h));
    let values: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    Ok(DeltaTable {
        psi: psi.id(),
        trend: classify_trend(&values),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseRow {
    pub r: f64,
    /// `max (1 - |z|) / (1 - |phi(z)|)` over `|z| = r`.
    pub angular: f64,
    /// `max Psi^{-1}(1/(1 - |phi(z)|)) / Psi^{-1}(1/(1 - |z|))` over `|z| = r`.
    pub orlicz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseTable {
    pub rows: Vec<PointwiseRow>,
    pub angular_trend: Trend,
    pub orlicz_trend: Trend,
}

/// `1 - 2^{-k}` for `k = 1..=count`.
pub fn dyadic_radii(count: u32) -> Vec<f64> {
    (1..=count).map(|k| 1.0 - 2f64.powi(-(k as i32))).collect()
}

pub fn pointwise_ratios(phi: &SymbolMap, psi: &OrliczFunction, radii: &[f64]) -> Result<PointwiseTable> {
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(0.0..1.0).contains(&r) {
            return Err(invalid(format!("radius {r} outside [0, 1)")));
        }
        let base = psi.inverse(1.0 / (1.0 - r))?;
        let mut angular = 0.0f64;
        let mut orlicz = 0.0f64;
        for i in 0..ANGULAR_GRID {
            let z = Complex64::from_polar(r, 2.0 * std::f64::consts::PI * i as f64 / ANGULAR_GRID as f64);
            let gap = 1.0 - phi.eval(z)?.norm();
            if gap <= 0.0 {
                angular = f64::INFINITY;
                orlicz = f64::INFINITY;
                continue;
            }
            angular = angular.max((1.0 - r) / gap);
            orlicz = orlicz.max(psi.inverse(1.0 / gap)? / base);
        }
        rows.push(PointwiseRow { r, angular, orlicz });
    }
    rows.sort_by(|a, b| a.r.total_cmp(&b.r));
    let a: Vec<f64> = rows.iter().map(|x| x.angular).collect();
    let o: Vec<f64> = rows.iter().map(|x| x.orlicz).collect();
    Ok(PointwiseTable {
        angular_trend: classify_trend(&a),
        orlicz_trend: classify_trend(&o),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchattenRow {
    pub p: f64,
    pub luecking_diverging: Option<bool>,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchattenReport {
    /// Fitted `alpha` in `rho ~ C h^alpha`.
    pub alpha: Option<f64>,
    pub r_squared: Option<f64>,
    /// `c` in `rho <= e^{-c/h}` when an exponential bound is supported.
    pub c: Option<f64>,
    pub verdict: String,
    pub rows: Vec<SchattenRow>,
    /// Indices into the rho table used by the verdict.
    pub cites: Vec<usize>,
    pub banner: String,
}

pub const ALL_SP: &str = "all S_p";
pub const NO_SP: &str = "no S_p";
pub const INCONCLUSIVE: &str = "inconclusive";

/// Schatten-class verdicts from a rho table over a geometric `h`-grid, the
/// dyadic Luecking sums per `p` and, optionally, an exponential barrier
/// bound.
pub fn schatten_report(
    rho: &[RhoEstimate],
    sums: &[LueckingSums],
    exp_bound: Option<&RhoBoundReport>,
) -> SchattenReport {
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| rho[b].h.total_cmp(&rho[a].h));
    let positive: Vec<usize> = order.iter().copied().filter(|&i| rho[i].rho > 0.0).collect();
    let trailing_zero = order.last().is_some_and(|&i| rho[i].rho == 0.0);
    let rows_from = |verdict: &dyn Fn(&LueckingSums) -> String| -> Vec<SchattenRow> {
        sums.iter()
            .map(|s| SchattenRow {
                p: s.p,
                luecking_diverging: Some(s.diverging),
                verdict: verdict(s),
            })
            .collect()
    };
    let report = |alpha, r2, c, verdict: &str, rows, cites| SchattenReport {
        alpha,
        r_squared: r2,
        c,
        verdict: verdict.to_string(),
        rows,
        cites,
        banner: BANNER.into(),
    };
    if trailing_zero {
        let cites = order.iter().copied().filter(|&i| rho[i].rho == 0.0).collect();
        return report(None, None, None, ALL_SP, rows_from(&|_| "in S_p".into()), cites);
    }
    if let Some(c) = exp_bound.and_then(|b| b.fitted_c).filter(|&c| c > 0.0) {
        return report(None, None, Some(c), ALL_SP, rows_from(&|_| "in S_p".into()), order);
    }
    let x: Vec<f64> = positive.iter().map(|&i| rho[i].h.ln()).collect();
    let y: Vec<f64> = positive.iter().map(|&i| rho[i].rho.ln()).collect();
    let Some(fit) = linear_fit(&x, &y) else {
        return report(None, None, None, INCONCLUSIVE, rows_from(&|_| INCONCLUSIVE.into()), positive);
    };
    let alpha = Some(fit.slope);
    let r2 = Some(fit.r_squared);
    // exponential shape: log rho linear in 1/h with a better fit
    let inv: Vec<f64> = positive.iter().map(|&i| 1.0 / rho[i].h).collect();
    if let Some(e) = linear_fit(&inv, &y) {
        if e.slope < 0.0 && e.r_squared >= 0.9 && e.r_squared > fit.r_squared {
            return report(alpha, r2, Some(-e.slope), ALL_SP, rows_from(&|_| "in S_p".into()), positive);
        }
    }
    if fit.r_squared < 0.9 {
        return report(alpha, r2, None, INCONCLUSIVE, rows_from(&|_| INCONCLUSIVE.into()), positive);
    }
    let all_diverge = !sums.is_empty() && sums.iter().all(|s| s.diverging);
    if (fit.slope - 1.0).abs() <= 0.15 && all_diverge {
        return report(alpha, r2, None, NO_SP, rows_from(&|_| "not in S_p".into()), positive);
    }
    let rows = rows_from(&|s| if s.diverging { "not in S_p".into() } else { "in S_p".into() });
    let verdict = if rows.iter().all(|r| r.verdict == "in S_p") {
        "S_p for every tested p"
    } else if rows.iter().all(|r| r.verdict == "not in S_p") {
        "S_p for no tested p"
    } else {
        "mixed"
    };
    report(alpha, r2, None, verdict, rows, positive)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessVerdict {
    pub verdict: String,
    pub trend: Trend,
    /// Indices into the delta table.
    pub cites: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub h: f64,
    pub rho: f64,
    pub rho_stderr: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub banner: String,
    pub symbol: String,
    pub psi: String,
    pub samples: usize,
    pub table: Vec<ReportRow>,
    pub delta_trend: Trend,
    pub pointwise: PointwiseTable,
    pub luecking_sums: Vec<LueckingSums>,
    /// Nevanlinna-side integrals at `p = 2`, when the symbol has a preimage
    /// solver.
    pub luecking_integral: Option<LueckingIntegral>,
    pub compactness: CompactnessVerdict,
    pub schatten: SchattenReport,
    /// The `Delta` trend, the dyadic sums and the integrals do not
    /// contradict each other at `p = 2`.
    pub coherent: bool,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub samples: usize,
    pub eps: f64,
    pub p_list: Vec<f64>,
    pub radii: u32,
    pub integral_depth: u32,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            samples: 1 << 17,
            eps: crate::symbols::DEFAULT_EPS,
            p_list: vec![1.0, 2.0, 4.0],
            radii: 18,
            integral_depth: 10,
        }
    }
}

/// `start, start/ratio, ...` with `count` entries.
pub fn geometric_grid(start: f64, ratio: f64, count: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && start <= 1.0) || !(ratio > 1.0) || count == 0 {
        return Err(invalid(format!("bad geometric grid {start}:{ratio}:{count}")));
    }
    Ok((0..count).map(|k| start / ratio.powi(k as i32)).collect())
}

fn compactness_verdict(table: &DeltaTable) -> CompactnessVerdict {
    let verdict = match table.trend {
        Trend::ToZero => "compact",
        Trend::BoundedAway => "not compact",
        Trend::Inconclusive => INCONCLUSIVE,
    };
    CompactnessVerdict {
        verdict: verdict.into(),
        trend: table.trend,
        cites: (0..table.rows.len()).collect(),
    }
}

/// Whether the three `p = 2` indicators agree: a bounded-away `Delta`
/// (non-compact) is incompatible with convergent Luecking sums or
/// integrals (which would put the operator in `S_2`).
pub fn coherent_at_two(trend: Trend, sum_diverges: Option<bool>, integral_diverges: Option<bool>) -> bool {
    if let (Some(a), Some(b)) = (sum_diverges, integral_diverges) {
        if a != b {
            return false;
        }
    }
    let non_compact = trend == Trend::BoundedAway;
    let in_s2 = sum_diverges == Some(false) || integral_diverges == Some(false);
    !(non_compact && in_s2)
}

pub fn diagnostic_report(
    phi: &SymbolMap,
    psi: &OrliczFunction,
    hs: &[f64],
    cfg: &ReportConfig,
) -> Result<DiagnosticReport> {
    let sample = build_pullback(phi, cfg.samples, cfg.eps)?;
    diagnostic_report_from(phi, psi, &sample, hs, cfg)
}

pub fn diagnostic_report_from(
    phi: &SymbolMap,
    psi: &OrliczFunction,
    sample: &PullbackSample,
    hs: &[f64],
    cfg: &ReportConfig,
) -> Result<DiagnosticReport> {
    let rho = sample.rho_table(hs)?;
    let rho_values: Vec<f64> = rho.iter().map(|r| r.rho).collect();
    let delta = delta_ratio(psi, &rho_values, hs)?;
    let table: Vec<ReportRow> = delta
        .rows
        .iter()
        .map(|d| {
            let est = rho.iter().find(|r| r.h == d.h).expect("row for every h");
            ReportRow {
                h: d.h,
                rho: d.rho,
                rho_stderr: est.stderr,
                delta: d.delta,
            }
        })
        .collect();
    let pointwise = pointwise_ratios(phi, psi, &dyadic_radii(cfg.radii))?;
    let n_max = ((sample.len() as f64).log2() as u32).saturating_sub(4).min(12);
    let sums = cfg
        .p_list
        .iter()
        .map(|&p| sample.luecking_sum(p, n_max))
        .collect::<Result<Vec<_>>>()?;
    let integral = if phi.has_preimages() {
        Some(luecking_integral(phi, 2.0, cfg.integral_depth)?)
    } else {
        None
    };
    let compactness = compactness_verdict(&delta);
    let schatten = schatten_report(&rho, &sums, None);
    let sum2 = sums.iter().find(|s| s.p == 2.0).map(|s| s.diverging);
    let int2 = integral.as_ref().map(|i| i.diverging_ratio);
    let coherent = coherent_at_two(delta.trend, sum2, int2);
    let summary = format!("{}, {}", compactness.verdict, schatten.verdict);
    Ok(DiagnosticReport {
        banner: BANNER.into(),
        symbol: phi.id().to_string(),
        psi: psi.id(),
        samples: sample.len(),
        table,
        delta_trend: delta.trend,
        pointwise,
        luecking_sums: sums,
        luecking_integral: integral,
        compactness,
        schatten,
        coherent,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn identity_delta_is_constant() {
        let psi = OrliczFunction::power(2.0).unwrap();
        let hs = geometric_grid(0.2, 2.0, 9).unwrap();
        let rhos: Vec<f64> = hs.iter().map(|h| h / PI).collect();
        let t = delta_ratio(&psi, &rhos, &hs).unwrap();
        for r in &t.rows {
            assert!((r.delta - 1.0 / PI.sqrt()).abs() < 1e-9);
        }
        assert_eq!(t.trend, Trend::BoundedAway);
    }

    #[test]
    fn zero_rho_convention() {
        let psi = OrliczFunction::power(2.0).unwrap();
        let t = delta_ratio(&psi, &[0.0, 0.0, 0.0], &[0.4, 0.2, 0.1]).unwrap();
        assert!(t.rows.iter().all(|r| r.delta == 0.0));
        assert_eq!(t.trend, Trend::ToZero);
    }

    #[test]
    fn scaling_angular_ratio_vanishes() {
        let phi = SymbolMap::scaling(0.5).unwrap();
        let psi = OrliczFunction::power(2.0).unwrap();
        let t = pointwise_ratios(&phi, &psi, &dyadic_radii(12)).unwrap();
        for row in &t.rows {
            let exact = (1.0 - row.r) / (1.0 - 0.5 * row.r);
            assert!((row.angular - exact).abs() < 1e-12);
        }
        assert_eq!(t.angular_trend, Trend::ToZero);
        let id = pointwise_ratios(&SymbolMap::identity(), &psi, &dyadic_radii(6)).unwrap();
        assert!(id.rows.iter().all(|r| (r.angular - 1.0).abs() < 1e-12));
        assert_eq!(id.angular_trend, Trend::BoundedAway);
    }

    #[test]
    fn coherence_rules() {
        assert!(coherent_at_two(Trend::BoundedAway, Some(true), Some(true)));
        assert!(!coherent_at_two(Trend::BoundedAway, Some(false), None));
        assert!(coherent_at_two(Trend::ToZero, Some(true), None));
        assert!(!coherent_at_two(Trend::ToZero, Some(true), Some(false)));
    }

    fn rows(hs: &[f64], f: impl Fn(f64) -> f64) -> Vec<RhoEstimate> {
        hs.iter()
            .map(|&h| RhoEstimate { h, centers: 1, rho: f(h), stderr: 0.0, argmax_center: 0.0 })
            .collect()
    }

    fn sums(div: bool) -> Vec<LueckingSums> {
        [1.0, 2.0, 4.0]
            .iter()
            .map(|&p| LueckingSums { p, partial: vec![], diverging: div, warnings: vec![] })
            .collect()
    }

    #[test]
    fn schatten_verdicts() {
        let hs = geometric_grid(0.25, 2.0, 10).unwrap();
        let zero = schatten_report(&rows(&hs, |h| if h < 0.2 { 0.0 } else { 0.1 }), &sums(false), None);
        assert_eq!(zero.verdict, ALL_SP);
        let id = schatten_report(&rows(&hs, |h| h / PI), &sums(true), None);
        assert_eq!(id.verdict, NO_SP);
        assert!((id.alpha.unwrap() - 1.0).abs() < 1e-9);
        let exp = schatten_report(&rows(&hs, |h| (-0.04 / h).exp()), &sums(false), None);
        assert_eq!(exp.verdict, ALL_SP);
        let noisy = schatten_report(
            &rows(&hs, |h| if (h.log2() as i64) % 2 == 0 { 0.5 } else { h.powi(3) }),
            &sums(true),
            None,
        );
        assert_eq!(noisy.verdict, INCONCLUSIVE);
    }
}
