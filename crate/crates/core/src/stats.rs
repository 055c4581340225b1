//! Small statistical helpers shared by the diagnostic modules.

use serde::{Deserialize, Serialize};

/// Coarse asymptotic behaviour of a finite sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    #[serde(rename = "to-zero")]
    ToZero,
    BoundedAway,
    Inconclusive,
}

impl std::fmt::Display for Trend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Trend::ToZero => "to-zero",
            Trend::BoundedAway => "bounded-away",
            Trend::Inconclusive => "inconclusive",
        })
    }
}

/// Compares the first and the last third of a sweep ordered toward the limit.
///
/// `ToZero` when the last-third mean is below a quarter of the first-third
/// mean (or the whole last third vanishes), `BoundedAway` when the
/// last-third minimum stays above half the first-third mean.
pub fn classify_trend(values: &[f64]) -> Trend {
    let n = values.len();
    if n < 3 {
        return Trend::Inconclusive;
    }
    let k = n / 3;
    let first = &values[..k];
    let last = &values[n - k..];
    let first_mean = mean(first);
    let last_mean = mean(last);
    let last_min = last.iter().copied().fold(f64::INFINITY, f64::min);
    if last.iter().all(|&v| v == 0.0) {
        return Trend::ToZero;
    }
    if first_mean > 0.0 && last_mean < 0.25 * first_mean {
        Trend::ToZero
    } else if first_mean > 0.0 && last_min > 0.5 * first_mean {
        Trend::BoundedAway
    } else {
        Trend::Inconclusive
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Ordinary least squares `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Divergence heuristic for partial sums `S_1, S_2, ...`.
///
/// The increments over the last half of the range must stay above half the
/// mean increment of the first half (and above an absolute floor). A series
/// whose increments fade or vanish is reported as stabilizing.
pub fn partial_sums_diverge(partial: &[f64]) -> bool {
    if partial.len() < 2 {
        return false;
    }
    let mut inc = Vec::with_capacity(partial.len());
    let mut prev = 0.0;
    for &s in partial {
        inc.push(s - prev);
        prev = s;
    }
    let half = inc.len() / 2;
    let first_mean = mean(&inc[..half.max(1)]);
    let last_min = inc[half..].iter().copied().fold(f64::INFINITY, f64::min);
    last_min >= (0.5 * first_mean).max(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_cases() {
        assert_eq!(classify_trend(&[1.0, 0.5, 0.2, 0.1, 0.01, 0.001]), Trend::ToZero);
        assert_eq!(classify_trend(&[0.5, 0.5, 0.5, 0.5, 0.5, 0.5]), Trend::BoundedAway);
        assert_eq!(classify_trend(&[1.0, 1.0, 0.0, 0.0]), Trend::ToZero);
        assert_eq!(classify_trend(&[1.0, 1.0, 0.4, 0.4, 0.4, 0.4]), Trend::Inconclusive);
    }

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn divergence_heuristic() {
        let geometric: Vec<f64> = (1..=10).map(|n| 2f64.powi(n) - 1.0).collect();
        assert!(partial_sums_diverge(&geometric));
        let linear: Vec<f64> = (1..=10).map(|n| n as f64).collect();
        assert!(partial_sums_diverge(&linear));
        let flat = vec![0.7; 10];
        assert!(!partial_sums_diverge(&flat));
        let convergent: Vec<f64> = (1..=12).map(|n| 1.0 - 0.5f64.powi(n)).collect();
        assert!(!partial_sums_diverge(&convergent));
    }
}
