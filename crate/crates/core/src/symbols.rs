//! Analytic self-maps of the unit disk used as composition symbols.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blaschke::{
    build_slow_blaschke, radius_power, EquidistributedFactor, SlowBlaschkeSpec, SlowSpecFile,
    DEFAULT_DEPTH,
};
use crate::error::{invalid, Error, Result};
use crate::orlicz::{delta_from_psi, OrliczFunction, PsiSpec};
use crate::roots::{aberth_roots, cluster_roots, newton_polish, Polynomial};

/// Where a slow Blaschke spec comes from: a path to a JSON file written by
/// `build-blaschke`, or the spec inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlowSource {
    Path(String),
    Inline(SlowSpecFile),
}

/// Serializable symbol description, e.g. `{"kind":"monomial","k":2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    // braces make strict parsing reject stray keys on field-less kinds
    Identity {},
    Scaling {
        s: f64,
    },
    Monomial {
        k: u32,
    },
    /// `(a z + b) / (c z + d)`; complex numbers as `[re, im]`.
    Lft {
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    },
    Blaschke {
        factors: Vec<EquidistributedFactor>,
        #[serde(default)]
        rotation: f64,
    },
    /// Either `spec` (file or inline), or `psi` with an optional `depth` to
    /// build the product on the fly.
    Slow {
        #[serde(default)]
        spec: Option<SlowSource>,
        #[serde(default)]
        psi: Option<PsiSpec>,
        #[serde(default)]
        depth: Option<u32>,
    },
    Punctured {},
    /// `((u - alpha) / (1 - conj(alpha) u))^2` applied after `inner`.
    SquaredBlaschke {
        alpha: Complex64,
        inner: Box<SymbolSpec>,
    },
}

#[derive(Debug, Clone)]
enum Kind {
    Identity,
    Scaling(f64),
    Monomial(u32),
    Lft {
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    },
    FiniteBlaschke {
        factors: Vec<EquidistributedFactor>,
        rotation: f64,
    },
    Slow(Arc<SlowBlaschkeSpec>),
    Punctured,
    SquaredBlaschkeOf {
        alpha: Complex64,
        inner: Box<SymbolMap>,
    },
}

/// Number of preimages of a generic point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Valence {
    Finite(u64),
    Infinite,
}

/// A boundary sample `phi((1 - eps) e^{i theta})` with its convergence tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryValue {
    pub value: Complex64,
    pub converged: bool,
}

/// Analytic self-map of the disk.
#[derive(Debug, Clone)]
pub struct SymbolMap {
    kind: Kind,
    id: String,
}

/// Default radial offset for boundary values.
pub const DEFAULT_EPS: f64 = 1e-6;

impl SymbolMap {
    pub fn identity() -> Self {
        SymbolMap {
            kind: Kind::Identity,
            id: "identity".into(),
        }
    }

    pub fn scaling(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid(format!("scaling factor must lie in (0,1), got {s}")));
        }
        Ok(SymbolMap {
            kind: Kind::Scaling(s),
            id: format!("scaling({s})"),
        })
    }

    pub fn monomial(k: u32) -> Result<Self> {
        if k < 1 {
            return Err(invalid("monomial degree must be at least 1"));
        }
        Ok(SymbolMap {
            kind: Kind::Monomial(k),
            id: format!("monomial({k})"),
        })
    }

    /// Linear-fractional map; accepted only when the pole lies outside the
    /// closed disk and `|phi| <= 1` on a 1024-point boundary grid.
    pub fn lft(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        if (a * d - b * c).norm() == 0.0 {
            return Err(invalid("degenerate linear-fractional map (ad - bc = 0)"));
        }
        if d.norm() <= c.norm() {
            return Err(invalid("linear-fractional map has a pole in the closed disk"));
        }
        let map = SymbolMap {
            kind: Kind::Lft { a, b, c, d },
            id: format!("lft({a},{b},{c},{d})"),
        };
        for i in 0..1024 {
            let z = Complex64::from_polar(1.0, 2.0 * PI * i as f64 / 1024.0);
            let v = map.eval_unchecked(z).norm();
            if v > 1.0 + 1e-12 {
                return Err(invalid(format!(
                    "linear-fractional map is not a self-map: |phi| = {v} on the circle"
                )));
            }
        }
        Ok(map)
    }

    pub fn finite_blaschke(factors: Vec<EquidistributedFactor>, rotation: f64) -> Result<Self> {
        if factors.is_empty() {
            return Err(invalid("finite Blaschke symbol needs at least one factor"));
        }
        for f in &factors {
            f.validate()?;
        }
        let deg: u64 = factors.iter().map(|f| f.p).sum();
        if deg > 4096 {
            return Err(invalid(format!(
                "finite Blaschke symbol of degree {deg} exceeds the supported 4096"
            )));
        }
        let id = format!(
            "blaschke[{}]",
            factors
                .iter()
                .map(|f| format!("p={},r={}", f.p, f.r))
                .collect::<Vec<_>>()
                .join(";")
        );
        Ok(SymbolMap {
            kind: Kind::FiniteBlaschke { factors, rotation },
            id,
        })
    }

    pub fn slow(spec: SlowBlaschkeSpec) -> Self {
        let id = format!("slow(depth={},N={})", spec.depth, spec.n_monomial);
        SymbolMap {
            kind: Kind::Slow(Arc::new(spec)),
            id,
        }
    }

    pub fn punctured() -> Self {
        SymbolMap {
            kind: Kind::Punctured,
            id: "punctured".into(),
        }
    }

    pub fn squared_blaschke_of(alpha: Complex64, inner: SymbolMap) -> Result<Self> {
        if alpha.norm() >= 1.0 {
            return Err(invalid("squared Blaschke factor needs |alpha| < 1"));
        }
        let id = format!("sqblaschke({alpha})o{}", inner.id);
        Ok(SymbolMap {
            kind: Kind::SquaredBlaschkeOf {
                alpha,
                inner: Box::new(inner),
            },
            id,
        })
    }

    /// Builds a symbol from its description; relative slow-spec paths are
    /// resolved against `base`.
    pub fn from_spec(spec: &SymbolSpec, base: Option<&Path>) -> Result<Self> {
        match spec {
            SymbolSpec::Identity {} => Ok(Self::identity()),
            SymbolSpec::Scaling { s } => Self::scaling(*s),
            SymbolSpec::Monomial { k } => Self::monomial(*k),
            SymbolSpec::Lft { a, b, c, d } => Self::lft(*a, *b, *c, *d),
            SymbolSpec::Blaschke { factors, rotation } => {
                Self::finite_blaschke(factors.clone(), *rotation)
            }
            SymbolSpec::Slow { spec, psi, depth } => {
                let built = match (spec, psi) {
                    (Some(SlowSource::Inline(file)), None) => SlowBlaschkeSpec::from_file(file)?,
                    (Some(SlowSource::Path(p)), None) => {
                        let path = match base {
                            Some(b) if Path::new(p).is_relative() => b.join(p),
                            _ => Path::new(p).to_path_buf(),
                        };
                        let text = std::fs::read_to_string(&path).map_err(|e| {
                            Error::Config(format!("cannot read slow spec {}: {e}", path.display()))
                        })?;
                        let file: SlowSpecFile = serde_json::from_str(&text)
                            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                        SlowBlaschkeSpec::from_file(&file)?
                    }
                    (None, Some(psi)) => {
                        let delta = delta_from_psi(&OrliczFunction::from_spec(psi)?);
                        build_slow_blaschke(&delta, depth.unwrap_or(DEFAULT_DEPTH))?
                    }
                    _ => {
                        return Err(Error::Config(
                            "slow symbol needs exactly one of `spec` or `psi`".into(),
                        ))
                    }
                };
                Ok(Self::slow(built))
            }
            SymbolSpec::Punctured {} => Ok(Self::punctured()),
            SymbolSpec::SquaredBlaschke { alpha, inner } => {
                Self::squared_blaschke_of(*alpha, Self::from_spec(inner, base)?)
            }
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn valence(&self) -> Valence {
        match &self.kind {
            Kind::Identity | Kind::Scaling(_) | Kind::Lft { .. } => Valence::Finite(1),
            Kind::Monomial(k) => Valence::Finite(*k as u64),
            Kind::FiniteBlaschke { factors, .. } => {
                Valence::Finite(factors.iter().map(|f| f.p).sum())
            }
            Kind::Slow(_) | Kind::Punctured => Valence::Infinite,
            Kind::SquaredBlaschkeOf { inner, .. } => match inner.valence() {
                Valence::Finite(v) => Valence::Finite(2 * v),
                Valence::Infinite => Valence::Infinite,
            },
        }
    }

    pub fn has_preimages(&self) -> bool {
        matches!(
            self.kind,
            Kind::Identity
                | Kind::Scaling(_)
                | Kind::Monomial(_)
                | Kind::Lft { .. }
                | Kind::FiniteBlaschke { .. }
        )
    }

    /// Inner symbols have unimodular boundary values almost everywhere.
    pub fn is_inner(&self) -> bool {
        match &self.kind {
            Kind::Identity | Kind::Monomial(_) | Kind::FiniteBlaschke { .. } | Kind::Slow(_) => {
                true
            }
            Kind::Punctured => true,
            Kind::SquaredBlaschkeOf { inner, .. } => inner.is_inner(),
            Kind::Scaling(_) | Kind::Lft { .. } => false,
        }
    }

    /// Blaschke-type symbols extend continuously to the closed disk away
    /// from a null set and are evaluated on the circle itself.
    pub fn evaluates_on_circle(&self) -> bool {
        match &self.kind {
            Kind::FiniteBlaschke { .. } | Kind::Slow(_) => true,
            Kind::SquaredBlaschkeOf { inner, .. } => inner.evaluates_on_circle(),
            _ => false,
        }
    }

    pub fn slow_spec(&self) -> Option<&SlowBlaschkeSpec> {
        match &self.kind {
            Kind::Slow(s) => Some(s),
            _ => None,
        }
    }

    /// `phi(z)` for `|z| < 1`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if !(z.norm() < 1.0) {
            return Err(invalid(format!("symbol evaluation needs |z| < 1, got {z}")));
        }
        Ok(self.eval_unchecked(z))
    }

    /// `phi(z)` without the domain check; meaningful on the closed disk for
    /// kinds with a continuous extension.
    pub fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            Kind::Identity => z,
            Kind::Scaling(s) => z * *s,
            Kind::Monomial(k) => z.powu(*k),
            Kind::Lft { a, b, c, d } => (a * z + b) / (c * z + d),
            Kind::FiniteBlaschke { factors, rotation } => {
                let mut acc = Complex64::from_polar(1.0, *rotation);
                for f in factors {
                    acc *= f.eval(z);
                }
                acc
            }
            Kind::Slow(spec) => spec.eval(z),
            Kind::Punctured => {
                let one = Complex64::new(1.0, 0.0);
                (-(one + z) / (one - z)).exp()
            }
            Kind::SquaredBlaschkeOf { alpha, inner } => {
                let u = inner.eval_unchecked(z);
                let m = (u - alpha) / (1.0 - alpha.conj() * u);
                m * m
            }
        }
    }

    /// `phi((1 - eps) e^{i theta})`, flagged unconverged when it differs
    /// from the value at `eps / 2` by more than `1e-4`.
    pub fn radial_boundary_value(&self, theta: f64, eps: f64) -> Result<BoundaryValue> {
        if !(eps > 0.0 && eps <= 1e-3) {
            return Err(invalid(format!("radial offset must lie in (0, 1e-3], got {eps}")));
        }
        let v1 = self.eval_unchecked(Complex64::from_polar(1.0 - eps, theta));
        let v2 = self.eval_unchecked(Complex64::from_polar(1.0 - 0.5 * eps, theta));
        Ok(BoundaryValue {
            value: v1,
            converged: v1.is_finite() && (v1 - v2).norm() <= 1e-4,
        })
    }

    /// All solutions of `phi(z) = w` in the disk with multiplicities.
    pub fn preimages(&self, w: Complex64) -> Result<Vec<(Complex64, u32)>> {
        if !(w.norm() < 1.0) {
            return Err(invalid(format!("preimages need |w| < 1, got {w}")));
        }
        let inside = |z: Complex64| z.norm() < 1.0 - 1e-14;
        match &self.kind {
            Kind::Identity => Ok(vec![(w, 1)]),
            Kind::Scaling(s) => {
                let z = w / *s;
                Ok(if inside(z) { vec![(z, 1)] } else { vec![] })
            }
            Kind::Monomial(k) => {
                if w.norm() == 0.0 {
                    return Ok(vec![(Complex64::new(0.0, 0.0), *k)]);
                }
                let m = w.norm().powf(1.0 / *k as f64);
                let a = w.arg();
                Ok((0..*k)
                    .map(|j| {
                        let z = Complex64::from_polar(m, (a + 2.0 * PI * j as f64) / *k as f64);
                        (z, 1)
                    })
                    .collect())
            }
            Kind::Lft { a, b, c, d } => {
                let den = a - c * w;
                if den.norm() == 0.0 {
                    return Ok(vec![]);
                }
                let z = (d * w - b) / den;
                Ok(if inside(z) { vec![(z, 1)] } else { vec![] })
            }
            Kind::FiniteBlaschke { factors, rotation } => {
                self.blaschke_preimages(factors, *rotation, w)
            }
            _ => Err(Error::NoSolver {
                kind: self.kind_name().into(),
            }),
        }
    }

    fn blaschke_preimages(
        &self,
        factors: &[EquidistributedFactor],
        rotation: f64,
        w: Complex64,
    ) -> Result<Vec<(Complex64, u32)>> {
        // e^{i a} prod (z^p - rho) - w prod (rho z^p - 1) = 0, rho = r^p
        let one = Polynomial::new(vec![Complex64::new(1.0, 0.0)]);
        let mut num = one.clone();
        let mut den = one;
        for f in factors {
            let rho = radius_power(f.r, f.p);
            let p = f.p as usize;
            let mut a = vec![Complex64::new(0.0, 0.0); p + 1];
            a[0] = Complex64::new(-rho, 0.0);
            a[p] = Complex64::new(1.0, 0.0);
            let mut b = vec![Complex64::new(0.0, 0.0); p + 1];
            b[0] = Complex64::new(-1.0, 0.0);
            b[p] = Complex64::new(rho, 0.0);
            num = num.mul(&Polynomial::new(a));
            den = den.mul(&Polynomial::new(b));
        }
        let poly = num
            .scale(Complex64::from_polar(1.0, rotation))
            .sub(&den.scale(w));
        let raw = aberth_roots(&poly)?;
        let polished: Vec<Complex64> = raw
            .iter()
            .map(|&z| newton_polish(|x| poly.eval_with_derivative(x), z, 30))
            .collect();
        let clusters = cluster_roots(&polished, 1e-6);
        let mut out = Vec::new();
        for (z, m) in clusters {
            if z.norm() < 1.0 - 1e-14 {
                let resid = (self.eval_unchecked(z) - w).norm();
                if resid > 1e-10 {
                    return Err(Error::NotConverged(format!(
                        "preimage residual {resid:e} at {z} exceeds 1e-10"
                    )));
                }
                out.push((z, m as u32));
            }
        }
        out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        Ok(out)
    }

    fn kind_name(&self) -> &'static str {
        match &self.kind {
            Kind::Identity => "identity",
            Kind::Scaling(_) => "scaling",
            Kind::Monomial(_) => "monomial",
            Kind::Lft { .. } => "lft",
            Kind::FiniteBlaschke { .. } => "blaschke",
            Kind::Slow(_) => "slow",
            Kind::Punctured => "punctured",
            Kind::SquaredBlaschkeOf { .. } => "squared_blaschke",
        }
    }

    /// Samples `count` uniform points of the disk and checks `|phi| < 1`
    /// (up to `1e-12`); returns the largest modulus seen.
    pub fn check_self_map(&self, count: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..count {
            let r = rng.gen::<f64>().sqrt() * (1.0 - 1e-9);
            let t = rng.gen::<f64>() * 2.0 * PI;
            let v = self.eval_unchecked(Complex64::from_polar(r, t)).norm();
            if !(v < 1.0 + 1e-12) {
                return Err(invalid(format!(
                    "{} is not a self-map: |phi| = {v} at radius {r}",
                    self.id
                )));
            }
            worst = worst.max(v);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(SymbolMap::identity().eval(c(0.0, 0.3)).unwrap(), c(0.0, 0.3));
        let sq = SymbolMap::monomial(2).unwrap();
        let v = sq.eval(Complex64::from_polar(0.5, PI / 4.0)).unwrap();
        assert!((v - c(0.0, 0.25)).norm() < 1e-15);
        let p = SymbolMap::punctured().eval(c(0.0, 0.0)).unwrap();
        assert!((p.re - (-1f64).exp()).abs() < 1e-15 && p.im == 0.0);
        assert!(SymbolMap::identity().eval(c(1.0, 0.0)).is_err());
    }

    #[test]
    fn radial_examples() {
        let eps = 1e-6;
        let id = SymbolMap::identity().radial_boundary_value(PI / 3.0, eps).unwrap();
        assert!(id.converged);
        assert!((id.value.norm() - (1.0 - eps)).abs() < 1e-15);
        let s = SymbolMap::scaling(0.5).unwrap().radial_boundary_value(0.0, eps).unwrap();
        assert!((s.value - c(0.5 * (1.0 - eps), 0.0)).norm() < 1e-15);
        let p = SymbolMap::punctured().radial_boundary_value(PI, eps).unwrap();
        assert!(p.converged);
        assert!((p.value.norm() - (-eps / (2.0 - eps)).exp()).abs() < 1e-9);
        let q = SymbolMap::punctured().radial_boundary_value(0.0, eps).unwrap();
        assert!(!q.converged || q.value.norm() < 1e-4);
        assert!(SymbolMap::identity().radial_boundary_value(0.0, 0.1).is_err());
    }

    #[test]
    fn preimage_examples() {
        let w = c(0.2, 0.1);
        assert_eq!(SymbolMap::identity().preimages(w).unwrap(), vec![(w, 1)]);
        let mut r = SymbolMap::monomial(2).unwrap().preimages(c(0.25, 0.0)).unwrap();
        r.sort_by(|a, b| a.0.re.total_cmp(&b.0.re));
        assert!((r[0].0 - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((r[1].0 - c(0.5, 0.0)).norm() < 1e-15);
        let b = SymbolMap::finite_blaschke(vec![EquidistributedFactor::new(1, 0.5).unwrap()], 0.0)
            .unwrap();
        let z = b.preimages(c(0.0, 0.0)).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0].0 - c(0.5, 0.0)).norm() < 1e-14 && z[0].1 == 1);
        assert!(matches!(
            SymbolMap::punctured().preimages(w),
            Err(Error::NoSolver { .. })
        ));
    }

    #[test]
    fn blaschke_preimage_count_matches_degree() {
        let b = SymbolMap::finite_blaschke(
            vec![
                EquidistributedFactor::new(3, 0.6).unwrap(),
                EquidistributedFactor::new(2, 0.3).unwrap(),
            ],
            0.7,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let w = Complex64::from_polar(rng.gen::<f64>().sqrt() * 0.99, rng.gen::<f64>() * 6.3);
            let pre = b.preimages(w).unwrap();
            let total: u32 = pre.iter().map(|p| p.1).sum();
            assert_eq!(total, 5);
        }
    }

    #[test]
    fn double_preimage_detected() {
        // z^2 composed structure: a single factor p = 2 has phi'(0) = 0, so
        // w = phi(0) = r^2 has the double preimage 0
        let b = SymbolMap::finite_blaschke(vec![EquidistributedFactor::new(2, 0.5).unwrap()], 0.0)
            .unwrap();
        let pre = b.preimages(c(0.25, 0.0)).unwrap();
        assert_eq!(pre.len(), 1);
        assert_eq!(pre[0].1, 2);
        assert!(pre[0].0.norm() < 1e-7);
    }

    #[test]
    fn lft_validation() {
        let ok = SymbolMap::lft(c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert!(ok.is_ok());
        let pole = SymbolMap::lft(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.0));
        assert!(pole.is_err());
        let big = SymbolMap::lft(c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert!(big.is_err());
        let m = ok.unwrap();
        let pre = m.preimages(c(0.2, 0.0)).unwrap();
        assert!((pre[0].0 - c(0.4, 0.0)).norm() < 1e-15);
        assert!(m.preimages(c(0.7, 0.0)).unwrap().is_empty());
    }

    #[test]
    fn self_map_checks() {
        for s in [
            SymbolMap::identity(),
            SymbolMap::scaling(0.5).unwrap(),
            SymbolMap::monomial(3).unwrap(),
            SymbolMap::punctured(),
            SymbolMap::squared_blaschke_of(c(0.3, 0.0), SymbolMap::punctured()).unwrap(),
        ] {
            assert!(s.check_self_map(2000, 1).unwrap() < 1.0 + 1e-12);
        }
    }

    #[test]
    fn spec_parsing() {
        let s: SymbolSpec = serde_json::from_str(r#"{"kind":"monomial","k":2}"#).unwrap();
        assert_eq!(s, SymbolSpec::Monomial { k: 2 });
        let s: SymbolSpec = serde_json::from_str(r#"{"kind":"punctured"}"#).unwrap();
        assert_eq!(s, SymbolSpec::Punctured {});
        let s: SymbolSpec =
            serde_json::from_str(r#"{"kind":"blaschke","factors":[{"p":1,"r":0.5}]}"#).unwrap();
        assert!(matches!(s, SymbolSpec::Blaschke { .. }));
        let s: SymbolSpec = serde_json::from_str(r#"{"kind":"slow","spec":"spec.json"}"#).unwrap();
        assert!(matches!(s, SymbolSpec::Slow { spec: Some(SlowSource::Path(_)), .. }));
        assert!(serde_json::from_str::<SymbolSpec>(r#"{"kind":"identity","x":1}"#).is_err());
        let s: SymbolSpec =
            serde_json::from_str(r#"{"kind":"slow","psi":{"family":"power","p":2},"depth":10}"#)
                .unwrap();
        let m = SymbolMap::from_spec(&s, None).unwrap();
        assert_eq!(m.valence(), Valence::Infinite);
    }
}
