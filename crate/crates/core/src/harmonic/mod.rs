//! Harmonic measure by Brownian exit simulation, the barrier domains in the
//! region between two hyperbolas, and the hole principle.

pub mod barrier;
pub mod domain;
pub mod walk;

pub use barrier::{
    b, bracket_index, bracket_midpoints, calibrate_chain, calibrate_hole, default_start,
    delta_max, m_n, omega, omega_n, reestimate_hole, rho_bound_report, Barrier, BarrierRun,
    EpsScheme, HoleCalibration, RhoBoundReport, RhoBoundRow,
};
pub use domain::{PlanarDomain, DEFAULT_Y_CAP};
pub use walk::{
    brownian_exit, exit_sample, harmonic_measure, hole_principle_check, poisson_arc_measure,
    HoleCheck, MeasureEstimate, WalkConfig,
};

use num_complex::Complex64;

use crate::error::Result;

/// A configured `(G0, G1, H, a)` comparison.
pub struct HoleTriple {
    pub g0: PlanarDomain,
    pub g1: PlanarDomain,
    pub hole: Option<String>,
    pub start: Complex64,
}

/// The three standard comparisons: a slit disk inside the disk, the disk
/// against itself, and `Omega_n` inside `Omega` through the hole `H_n`.
/// The barrier domains use fixed half-widths at `frac` of the maximum.
pub fn standard_triples(n: u32, frac: f64) -> Result<Vec<HoleTriple>> {
    let barriers: Vec<Barrier> = (1..=n + 2)
        .map(|j| Barrier::new(j, frac * delta_max(j)))
        .collect::<Result<_>>()?;
    let g0 = omega_n(&barriers, n, barriers[n as usize - 1].delta)?;
    let g1 = omega(&barriers, DEFAULT_Y_CAP)?;
    Ok(vec![
        HoleTriple {
            g0: PlanarDomain::disk_minus_slit(0.3, 1.0),
            g1: PlanarDomain::disk(),
            hole: Some("slit".into()),
            start: Complex64::new(-0.2, 0.1),
        },
        HoleTriple {
            g0: PlanarDomain::disk(),
            g1: PlanarDomain::disk(),
            hole: None,
            start: Complex64::new(0.1, -0.2),
        },
        HoleTriple {
            g0,
            g1,
            hole: Some("hole".into()),
            start: default_start(),
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_three_hole_principle() {
        let cfg = WalkConfig { paths: 3000, seed: 21, ..WalkConfig::default() };
        for t in standard_triples(3, 0.99).unwrap() {
            let r = hole_principle_check(&t.g0, &t.g1, t.hole.as_deref(), t.start, &cfg).unwrap();
            assert!(r.pass, "{} in {}: {r:?}", r.g0, r.g1);
            assert_eq!(r.violations, 0);
        }
    }
}
