//! Planar domains described by labelled boundary pieces.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One boundary curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Segment `a + t (b - a)`, `t in [0, 1]`.
    Segment { a: Complex64, b: Complex64 },
    /// Ray `origin + t dir`, `t >= 0`, with `|dir| = 1`.
    Ray { origin: Complex64, dir: Complex64 },
    /// Full line `origin + t dir`, `|dir| = 1`.
    Line { origin: Complex64, dir: Complex64 },
    /// Arc of the circle `|z - center| = radius` from angle `start`
    /// counter-clockwise through `sweep` (at most `2 pi`).
    Arc {
        center: Complex64,
        radius: f64,
        start: f64,
        sweep: f64,
    },
    /// `y = c + 1/x` for `x in [xa, xb]`, `0 < xa < xb <= infinity`.
    Hyperbola { c: f64, xa: f64, xb: f64 },
}

/// Critical points of the squared distance from `(px, q)` to `(x, 1/x)`
/// solve `g(x) = x^4 - px x^3 + q x - 1 = 0`.
fn quartic(x: f64, px: f64, q: f64) -> (f64, f64) {
    let g = ((x - px) * x * x + q) * x - 1.0;
    let dg = (4.0 * x - 3.0 * px) * x * x + q;
    (g, dg)
}

fn quartic_slope(x: f64, px: f64, q: f64) -> (f64, f64) {
    let dg = (4.0 * x - 3.0 * px) * x * x + q;
    let ddg = 6.0 * x * (2.0 * x - px);
    (dg, ddg)
}

/// Root of a monotone function on `[lo, hi]` with a sign change, by Newton
/// steps safeguarded with bisection.
fn safeguarded_root<F: Fn(f64) -> (f64, f64)>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let (flo, _) = f(lo);
    let increasing = flo < 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, d) = f(x);
        if v == 0.0 {
            return x;
        }
        if (v < 0.0) == increasing {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - v / d;
        let next = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-16 * x.abs().max(1e-300) || hi - lo <= 1e-16 * hi.abs() {
            return next;
        }
        x = next;
    }
    x
}

/// All positive roots of `g` below `bound`, splitting `(0, bound]` at the
/// roots of `g'`; `g'` is monotone on each side of `x = px / 2` since
/// `g'' = 6x(2x - px)`.
fn quartic_positive_roots(px: f64, q: f64, bound: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    let split = if px > 0.0 && px / 2.0 < bound { Some(px / 2.0) } else { None };
    let slope_intervals: Vec<(f64, f64)> = match split {
        Some(s) => vec![(0.0, s), (s, bound)],
        None => vec![(0.0, bound)],
    };
    for (a, b) in slope_intervals {
        let (da, _) = quartic_slope(a, px, q);
        let (db, _) = quartic_slope(b, px, q);
        if da == 0.0 {
            breaks.push(a);
        } else if da.signum() != db.signum() && db != 0.0 {
            breaks.push(safeguarded_root(|x| quartic_slope(x, px, q), a, b));
        }
    }
    breaks.push(bound);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut roots = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ga, _) = quartic(a, px, q);
        let (gb, _) = quartic(b, px, q);
        if gb == 0.0 {
            roots.push(b);
        } else if ga.signum() != gb.signum() && ga != 0.0 {
            roots.push(safeguarded_root(|x| quartic(x, px, q), a, b));
        }
    }
    roots
}

fn closest_on_segment(z: Complex64, a: Complex64, d: Complex64, tmin: f64, tmax: f64) -> Complex64 {
    let dd = d.norm_sqr();
    let t = if dd == 0.0 {
        0.0
    } else {
        (((z - a) * d.conj()).re / dd).clamp(tmin, tmax)
    };
    a + d * t
}

impl Shape {
    /// Closest point of the piece to `z` and its distance.
    pub fn closest(&self, z: Complex64) -> (f64, Complex64) {
        let p = match *self {
            Shape::Segment { a, b } => closest_on_segment(z, a, b - a, 0.0, 1.0),
            Shape::Ray { origin, dir } => closest_on_segment(z, origin, dir, 0.0, f64::INFINITY),
            Shape::Line { origin, dir } => {
                closest_on_segment(z, origin, dir, f64::NEG_INFINITY, f64::INFINITY)
            }
            Shape::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let w = z - center;
                let rel = (w.arg() - start).rem_euclid(2.0 * PI);
                if rel <= sweep || w.norm() == 0.0 {
                    let ang = if w.norm() == 0.0 { start } else { w.arg() };
                    center + Complex64::from_polar(radius, ang)
                } else {
                    let e0 = center + Complex64::from_polar(radius, start);
                    let e1 = center + Complex64::from_polar(radius, start + sweep);
                    if (z - e0).norm() <= (z - e1).norm() {
                        e0
                    } else {
                        e1
                    }
                }
            }
            Shape::Hyperbola { c, xa, xb } => {
                let px = z.re;
                let q = z.im - c;
                let bound = 1.0 + px.abs().max(q.abs()).max(1.0);
                let mut best = f64::INFINITY;
                let mut best_x = xa;
                let mut consider = |x: f64| {
                    if x.is_finite() && x >= xa && x <= xb {
                        let d = (x - px).powi(2) + (1.0 / x - q).powi(2);
                        if d < best {
                            best = d;
                            best_x = x;
                        }
                    }
                };
                consider(xa);
                consider(xb);
                for r in quartic_positive_roots(px, q, bound) {
                    consider(r);
                }
                Complex64::new(best_x, c + 1.0 / best_x)
            }
        };
        ((z - p).norm(), p)
    }

    /// Cheap lower bound on the distance from `z` to the piece.
    pub fn lower_bound(&self, z: Complex64) -> f64 {
        match *self {
            Shape::Arc { center, radius, .. } => ((z - center).norm() - radius).abs(),
            Shape::Hyperbola { c, xa, xb } => {
                let (x0, x1) = (xa, xb);
                let (y0, y1) = (c + 1.0 / xb, c + 1.0 / xa);
                let dx = (x0 - z.re).max(z.re - x1).max(0.0);
                let dy = (y0 - z.im).max(z.im - y1).max(0.0);
                dx.hypot(dy)
            }
            _ => 0.0,
        }
    }

    pub fn is_hyperbola(&self) -> bool {
        matches!(self, Shape::Hyperbola { .. })
    }
}

/// A boundary piece with its exit label.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub shape: Shape,
    pub label: String,
}

impl Piece {
    pub fn new(shape: Shape, label: impl Into<String>) -> Self {
        Piece {
            shape,
            label: label.into(),
        }
    }
}

/// Which inside test applies.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    Disk,
    DiskMinusSlit { from: f64, to: f64 },
    UpperHalfDisk,
    HalfPlane,
    Strip { width: f64 },
    RegionR,
    /// `R` minus the barriers, optionally cut at altitude `top`.
    Omega {
        barriers: Vec<super::barrier::Barrier>,
        top: Option<f64>,
    },
}

/// Nearest-boundary query result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    /// Exact distance to the boundary.
    pub distance: f64,
    /// Radius of the next walk step, at most `distance`.
    pub step: f64,
    pub point: Complex64,
    pub piece: usize,
}

/// Fraction of the hyperbola distance used as the step radius.
pub const HYPERBOLA_STEP_FACTOR: f64 = 0.8;

/// Altitude above which paths in the region `R` are labelled `far`.
pub const DEFAULT_Y_CAP: f64 = 1000.0;

#[derive(Debug, Clone)]
pub struct PlanarDomain {
    pub name: String,
    pub kind: DomainKind,
    pub pieces: Vec<Piece>,
    /// Paths with `|z|` beyond this radius exit with label `far`.
    pub far_radius: Option<f64>,
    pub y_cap: f64,
    /// Finite box `(xmin, xmax, ymin, ymax)` for containment sampling.
    pub sample_box: (f64, f64, f64, f64),
}

/// Serializable description of a boundary piece, for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceReport {
    pub label: String,
    pub shape: String,
}

pub(crate) fn in_region_r(z: Complex64, y_cap: f64) -> bool {
    z.re > 0.0 && z.im > 1.0 / z.re && z.im < 1.0 / z.re + 4.0 * PI && z.im < y_cap
}

impl PlanarDomain {
    pub fn inside(&self, z: Complex64) -> bool {
        if !z.is_finite() {
            return false;
        }
        match &self.kind {
            DomainKind::Disk => z.norm() < 1.0,
            DomainKind::DiskMinusSlit { from, to } => {
                z.norm() < 1.0 && !(z.im == 0.0 && z.re >= *from && z.re <= *to)
            }
            DomainKind::UpperHalfDisk => z.norm() < 1.0 && z.im > 0.0,
            DomainKind::HalfPlane => z.re > 0.0,
            DomainKind::Strip { width } => z.im > 0.0 && z.im < *width,
            DomainKind::RegionR => in_region_r(z, self.y_cap),
            DomainKind::Omega { barriers, top } => {
                in_region_r(z, self.y_cap)
                    && top.is_none_or(|t| z.im < t)
                    && !barriers.iter().any(|b| b.contains(z))
            }
        }
    }

    /// Nearest boundary point, pruning pieces by their lower bounds.
    pub fn nearest(&self, z: Complex64) -> Nearest {
        let mut best = Nearest {
            distance: f64::INFINITY,
            step: f64::INFINITY,
            point: z,
            piece: usize::MAX,
        };
        for (i, piece) in self.pieces.iter().enumerate() {
            let factor = if piece.shape.is_hyperbola() {
                HYPERBOLA_STEP_FACTOR
            } else {
                1.0
            };
            let lb = piece.shape.lower_bound(z);
            if lb >= best.distance && factor * lb >= best.step {
                continue;
            }
            let (d, p) = piece.shape.closest(z);
            if d < best.distance {
                best.distance = d;
                best.point = p;
                best.piece = i;
            }
            best.step = best.step.min(factor * d);
        }
        best
    }

    /// Exact distance from `z` to the boundary.
    pub fn distance(&self, z: Complex64) -> f64 {
        self.nearest(z).distance
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in &self.pieces {
            if !out.contains(&p.label) {
                out.push(p.label.clone());
            }
        }
        if self.far_radius.is_some() && !out.iter().any(|l| l == "far") {
            out.push("far".into());
        }
        out
    }

    pub fn describe(&self) -> Vec<PieceReport> {
        self.pieces
            .iter()
            .map(|p| PieceReport {
                label: p.label.clone(),
                shape: format!("{:?}", p.shape),
            })
            .collect()
    }

    /// Unit disk with its circle split into labelled arcs; each entry is
    /// `(start angle, sweep, label)`.
    pub fn disk_with_arcs(arcs: &[(f64, f64, String)]) -> Self {
        let pieces = arcs
            .iter()
            .map(|(start, sweep, label)| {
                Piece::new(
                    Shape::Arc {
                        center: Complex64::new(0.0, 0.0),
                        radius: 1.0,
                        start: *start,
                        sweep: *sweep,
                    },
                    label.clone(),
                )
            })
            .collect();
        PlanarDomain {
            name: "disk".into(),
            kind: DomainKind::Disk,
            pieces,
            far_radius: None,
            y_cap: f64::INFINITY,
            sample_box: (-1.0, 1.0, -1.0, 1.0),
        }
    }

    pub fn disk() -> Self {
        Self::disk_with_arcs(&[(0.0, 2.0 * PI, "circle".into())])
    }

    /// Disk minus the radial slit `[from, to]` on the positive axis; the
    /// slit carries the label `slit`.
    pub fn disk_minus_slit(from: f64, to: f64) -> Self {
        let mut d = Self::disk();
        d.name = "disk-minus-slit".into();
        d.kind = DomainKind::DiskMinusSlit { from, to };
        d.pieces.push(Piece::new(
            Shape::Segment {
                a: Complex64::new(from, 0.0),
                b: Complex64::new(to, 0.0),
            },
            "slit",
        ));
        d
    }

    /// Upper half-disk; the diameter carries the label `diameter`.
    pub fn upper_half_disk() -> Self {
        PlanarDomain {
            name: "upper-half-disk".into(),
            kind: DomainKind::UpperHalfDisk,
            pieces: vec![
                Piece::new(
                    Shape::Arc {
                        center: Complex64::new(0.0, 0.0),
                        radius: 1.0,
                        start: 0.0,
                        sweep: PI,
                    },
                    "circle",
                ),
                Piece::new(
                    Shape::Segment {
                        a: Complex64::new(-1.0, 0.0),
                        b: Complex64::new(1.0, 0.0),
                    },
                    "diameter",
                ),
            ],
            far_radius: None,
            y_cap: f64::INFINITY,
            sample_box: (-1.0, 1.0, 0.0, 1.0),
        }
    }

    /// Right half-plane with the boundary segment `i[y0, y1]` labelled
    /// `target` and the rest `rest`.
    pub fn half_plane(y0: f64, y1: f64, far_radius: f64) -> Self {
        let i = Complex64::new(0.0, 1.0);
        PlanarDomain {
            name: "half-plane".into(),
            kind: DomainKind::HalfPlane,
            pieces: vec![
                Piece::new(Shape::Segment { a: i * y0, b: i * y1 }, "target"),
                Piece::new(Shape::Ray { origin: i * y1, dir: i }, "rest"),
                Piece::new(Shape::Ray { origin: i * y0, dir: -i }, "rest"),
            ],
            far_radius: Some(far_radius),
            y_cap: f64::INFINITY,
            sample_box: (0.0, 10.0, -10.0, 10.0),
        }
    }

    /// Horizontal strip `0 < Im z < width`.
    pub fn strip(width: f64) -> Self {
        PlanarDomain {
            name: "strip".into(),
            kind: DomainKind::Strip { width },
            pieces: vec![
                Piece::new(
                    Shape::Line {
                        origin: Complex64::new(0.0, 0.0),
                        dir: Complex64::new(1.0, 0.0),
                    },
                    "bottom",
                ),
                Piece::new(
                    Shape::Line {
                        origin: Complex64::new(0.0, width),
                        dir: Complex64::new(1.0, 0.0),
                    },
                    "top",
                ),
            ],
            far_radius: None,
            y_cap: f64::INFINITY,
            sample_box: (-10.0, 10.0, 0.0, width),
        }
    }

    /// The region between `y = 1/x` and `y = 1/x + 4 pi`, capped at
    /// altitude `y_cap`.
    pub fn region_r(y_cap: f64) -> Self {
        let four_pi = 4.0 * PI;
        PlanarDomain {
            name: "regionR".into(),
            kind: DomainKind::RegionR,
            pieces: vec![
                Piece::new(
                    Shape::Hyperbola {
                        c: 0.0,
                        xa: 1.0 / y_cap,
                        xb: f64::INFINITY,
                    },
                    "L0",
                ),
                Piece::new(
                    Shape::Hyperbola {
                        c: four_pi,
                        xa: 1.0 / (y_cap - four_pi),
                        xb: f64::INFINITY,
                    },
                    "L1",
                ),
                far_cap(y_cap),
            ],
            far_radius: None,
            y_cap,
            sample_box: (0.0, 10.0, 0.0, 40.0),
        }
    }
}

/// Horizontal segment closing the channel of `R` at altitude `y_cap`.
pub(crate) fn far_cap(y_cap: f64) -> Piece {
    Piece::new(
        Shape::Segment {
            a: Complex64::new(1.0 / y_cap, y_cap),
            b: Complex64::new(1.0 / (y_cap - 4.0 * PI), y_cap),
        },
        "far",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Brute-force distance to `y = c + 1/x` on `[xa, xb]` by dense
    /// sampling in `log x` followed by golden-section refinement.
    fn brute_hyperbola(z: Complex64, cc: f64, xa: f64, xb: f64) -> f64 {
        let xb = xb.min(1e4);
        let f = |x: f64| (x - z.re).hypot(cc + 1.0 / x - z.im);
        let n = 20000;
        let (la, lb) = (xa.ln(), xb.ln());
        let mut best = (f64::INFINITY, xa);
        for i in 0..=n {
            let x = (la + (lb - la) * i as f64 / n as f64).exp();
            let v = f(x);
            if v < best.0 {
                best = (v, x);
            }
        }
        let step = ((lb - la) / n as f64).exp();
        let (mut a, mut b) = ((best.1 / step).max(xa), (best.1 * step).min(xb));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if f(x1) < f(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        f(0.5 * (a + b)).min(best.0)
    }

    #[test]
    fn hyperbola_distance_matches_brute_force() {
        let cases = [
            (c(0.5, 3.0), 0.0, 0.01, f64::INFINITY),
            (c(0.5, 3.0), 4.0 * PI, 0.05, f64::INFINITY),
            (c(2.0, 0.3), 0.0, 0.1, 50.0),
            (c(0.05, 25.0), 0.0, 0.02, 0.2),
            (c(0.3, 1.0), 0.0, 0.5, 3.0),
            (c(1.0, 1.0), 0.0, 0.01, f64::INFINITY),
            (c(-0.5, -2.0), 0.0, 0.1, 10.0),
        ];
        for (z, cc, xa, xb) in cases {
            let s = Shape::Hyperbola { c: cc, xa, xb };
            let (d, p) = s.closest(z);
            let reference = brute_hyperbola(z, cc, xa, xb);
            assert!((d - reference).abs() < 1e-9 * reference.max(1.0), "{z}: {d} vs {reference}");
            assert!(((p.im - cc) * p.re - 1.0).abs() < 1e-12);
            assert!(s.lower_bound(z) <= d + 1e-15);
        }
    }

    #[test]
    fn segment_arc_distances() {
        let s = Shape::Segment { a: c(0.0, 0.0), b: c(1.0, 0.0) };
        assert!((s.closest(c(0.5, 2.0)).0 - 2.0).abs() < 1e-15);
        assert!((s.closest(c(2.0, 0.0)).0 - 1.0).abs() < 1e-15);
        let arc = Shape::Arc {
            center: c(0.0, 0.0),
            radius: 1.0,
            start: 0.0,
            sweep: PI,
        };
        assert!((arc.closest(c(0.0, 0.5)).0 - 0.5).abs() < 1e-15);
        assert!((arc.closest(c(0.0, -0.5)).0 - 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn disk_distance_and_labels() {
        let d = PlanarDomain::disk_with_arcs(&[
            (0.0, PI, "upper".into()),
            (PI, PI, "lower".into()),
        ]);
        let n = d.nearest(c(0.0, 0.9));
        assert!((n.distance - 0.1).abs() < 1e-15);
        assert_eq!(d.pieces[n.piece].label, "upper");
        assert!(d.inside(c(0.3, 0.3)) && !d.inside(c(1.0, 0.1)));
    }

    #[test]
    fn region_r_inside_test() {
        let r = PlanarDomain::region_r(DEFAULT_Y_CAP);
        assert!(r.inside(c(0.5, 3.0)));
        assert!(!r.inside(c(0.5, 1.9)));
        assert!(!r.inside(c(0.5, 2.0 + 4.0 * PI + 0.01)));
        assert!(!r.inside(c(-0.5, 3.0)));
        assert!(r.distance(c(0.5, 3.0)) > 0.0);
    }
}
