//! Bounded domains and their boundaries.
//!
//! A [`Boundary`] is immutable after construction and caches its surface
//! measure and enclosed volume. Analytic kinds (balls, halfspace caps,
//! smooth star-shaped curves and surfaces, graph patches) are integrated by
//! the polar rules in [`crate::quadrature`]; polylines and triangle meshes
//! by per-element rules.

pub mod analytic;
pub mod bvh;
pub mod graph;
pub mod io;
pub mod mesh;
pub mod polyline;
pub mod spec;
pub mod star;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::point::{axpy, dist, dist2, mat_mul, normalized, sub, Point, Similarity};

pub use analytic::{Ball, HalfspaceCap};
pub use graph::{GraphPatch, GraphProfile};
pub use mesh::TriMesh;
pub use polyline::Polyline;
pub use spec::{make_shape, make_shape_in, ShapeKind, ShapeSpec};
pub use star::{RadialFn, StarShaped};

/// Smooth surface a discrete boundary was sampled from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothSource {
    Ball(Ball),
    Star(StarShaped),
}

impl SmoothSource {
    /// Radial projection onto the surface.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SmoothSource::Ball(b) => b.closest(x),
            SmoothSource::Star(s) => match s.direction_of(x) {
                Some(u) => s.point(&u),
                None => x.to_vec(),
            },
        }
    }

    fn transformed(&self, sim: &Similarity) -> SmoothSource {
        match self {
            SmoothSource::Ball(b) => SmoothSource::Ball(Ball {
                center: sim.apply_point(&b.center),
                radius: b.radius * sim.scale,
            }),
            SmoothSource::Star(s) => SmoothSource::Star(transform_star(s, sim)),
        }
    }
}

fn transform_star(s: &StarShaped, sim: &Similarity) -> StarShaped {
    StarShaped::new(
        sim.apply_point(&s.center),
        mat_mul(&sim.rotation, &s.frame),
        s.scale * sim.scale,
        s.radial.clone(),
    )
    .expect("similarity preserves validity")
}

#[derive(Clone, Debug)]
pub enum BoundaryKind {
    Ball(Ball),
    HalfspaceCap(HalfspaceCap),
    Polyline(Polyline),
    Mesh(TriMesh),
    GraphPatch(GraphPatch),
    Smooth(StarShaped),
}

/// Point towards which a boundary has been graded, with its length scale.
#[derive(Clone, Debug, PartialEq)]
pub struct Focus {
    pub point: Vec<f64>,
    pub scale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointClass {
    Inside,
    Outside,
    OnBoundary,
}

/// Nearest boundary point with its outward unit normal.
#[derive(Clone, Debug)]
pub struct Closest {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
    pub dist: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TouchingSet {
    pub center: Point,
    pub radius: f64,
    pub points: Vec<Point>,
    pub tolerance: f64,
    /// The whole boundary touches (x0 is the centre of a ball); `points`
    /// is then a sample of it.
    pub full_sphere: bool,
}

#[derive(Clone, Debug)]
pub struct Boundary {
    kind: BoundaryKind,
    measure: f64,
    volume: Option<f64>,
    focus: Option<Focus>,
}

impl Boundary {
    pub fn new(kind: BoundaryKind) -> Result<Self> {
        let (measure, volume) = match &kind {
            BoundaryKind::Ball(b) => (b.measure(), Some(b.volume())),
            BoundaryKind::HalfspaceCap(h) => (h.measure(), None),
            BoundaryKind::Polyline(p) => (p.measure(), Some(p.signed_area())),
            BoundaryKind::Mesh(m) => (m.measure(), Some(m.signed_volume())),
            BoundaryKind::GraphPatch(g) => (g.measure(), None),
            BoundaryKind::Smooth(s) => (s.measure(), Some(s.volume())),
        };
        if !(measure > 0.0 && measure.is_finite()) {
            return Err(Error::InvalidShape(format!(
                "surface measure must be positive, got {measure}"
            )));
        }
        Ok(Boundary {
            kind,
            measure,
            volume,
            focus: None,
        })
    }

    pub fn kind(&self) -> &BoundaryKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            BoundaryKind::Ball(_) => "ball",
            BoundaryKind::HalfspaceCap(_) => "halfspace_cap",
            BoundaryKind::Polyline(_) => "polyline",
            BoundaryKind::Mesh(_) => "mesh",
            BoundaryKind::GraphPatch(_) => "graph_patch",
            BoundaryKind::Smooth(_) => "smooth",
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            BoundaryKind::Ball(b) => b.dim(),
            BoundaryKind::HalfspaceCap(h) => h.dim(),
            BoundaryKind::Polyline(_) => 2,
            BoundaryKind::Mesh(_) => 3,
            BoundaryKind::GraphPatch(g) => g.dim(),
            BoundaryKind::Smooth(s) => s.dim(),
        }
    }

    pub fn focus(&self) -> Option<&Focus> {
        self.focus.as_ref()
    }

    pub(crate) fn with_focus(mut self, focus: Option<Focus>) -> Self {
        self.focus = focus;
        self
    }

    pub fn is_closed(&self) -> bool {
        self.volume.is_some()
    }

    pub fn surface_measure(&self) -> f64 {
        self.measure
    }

    pub fn enclosed_volume(&self) -> Result<f64> {
        self.volume.ok_or(Error::PatchHasNoVolume)
    }

    /// `|∂Ω|^{1/(n-1)}`, the length scale used for relative tolerances.
    pub fn length_scale(&self) -> f64 {
        self.measure.powf(1.0 / (self.dim() as f64 - 1.0))
    }

    fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.len(),
            });
        }
        Ok(())
    }

    pub fn closest(&self, p: &[f64]) -> Closest {
        match &self.kind {
            BoundaryKind::Ball(b) => {
                let q = b.closest(p);
                Closest {
                    normal: b.normal(&q),
                    dist: dist(&q, p),
                    point: q,
                }
            }
            BoundaryKind::HalfspaceCap(h) => {
                let q = h.closest(p);
                Closest {
                    normal: h.normal.clone(),
                    dist: dist(&q, p),
                    point: q,
                }
            }
            BoundaryKind::Smooth(s) => {
                let (q, u, d) = s.closest(p);
                Closest {
                    normal: s.frame_at(&u).1,
                    dist: d,
                    point: q,
                }
            }
            BoundaryKind::GraphPatch(g) => {
                let (q, y, d) = g.closest(p);
                Closest {
                    normal: g.frame_at(&y).1,
                    dist: d,
                    point: q,
                }
            }
            BoundaryKind::Polyline(pl) => {
                let (q, i, d) = pl.closest(p);
                let (a, b) = pl.segment(i);
                let normal = if q == *a || q == *b {
                    let j = if q == *a {
                        (i + pl.len() - 1) % pl.len()
                    } else {
                        (i + 1) % pl.len()
                    };
                    let (n1, n2) = (pl.segment_normal(i), pl.segment_normal(j));
                    normalized(&[n1[0] + n2[0], n1[1] + n2[1]])
                } else {
                    pl.segment_normal(i).to_vec()
                };
                Closest {
                    point: q.to_vec(),
                    normal,
                    dist: d,
                }
            }
            BoundaryKind::Mesh(m) => {
                let (q, i, d) = m.closest(p);
                Closest {
                    point: q.to_vec(),
                    normal: m.face_normal(i).to_vec(),
                    dist: d,
                }
            }
        }
    }

    pub fn distance(&self, p: &[f64]) -> f64 {
        self.closest(p).dist
    }

    /// Inside/outside ignoring the boundary tolerance.
    fn strictly_inside(&self, p: &[f64]) -> bool {
        match &self.kind {
            BoundaryKind::Ball(b) => b.signed_distance(p) < 0.0,
            BoundaryKind::HalfspaceCap(h) => h.signed_distance(p) < 0.0,
            BoundaryKind::Smooth(s) => s.radial_excess(p) < 0.0,
            BoundaryKind::GraphPatch(g) => g.inside_depth(p) > 0.0,
            BoundaryKind::Polyline(pl) => pl.winding_number(p) != 0,
            BoundaryKind::Mesh(m) => m.winding_number(p) > 0.5,
        }
    }

    pub fn classify_point(&self, p: &[f64], tol: f64) -> Result<PointClass> {
        self.check_dim(p)?;
        if self.distance(p) <= tol {
            return Ok(PointClass::OnBoundary);
        }
        Ok(if self.strictly_inside(p) {
            PointClass::Inside
        } else {
            PointClass::Outside
        })
    }

    /// `T = ∂Ω ∩ ∂B(x0, r)`; `tol` defaults to `1e-6 r`, clusters merge
    /// within `1e-3 r`.
    pub fn touching_set(&self, x0: &[f64], tol: Option<f64>) -> Result<TouchingSet> {
        self.check_dim(x0)?;
        if self.classify_point(x0, 0.0)? != PointClass::Inside {
            return Err(Error::CenterNotInterior(x0.to_vec()));
        }
        let n = self.dim();
        let mut full_sphere = false;
        // candidate points with their distances to x0
        let cands: Vec<(Vec<f64>, f64)> = match &self.kind {
            BoundaryKind::Ball(b) => {
                let d = dist(x0, &b.center);
                if d <= 1e-12 * b.radius {
                    full_sphere = true;
                    sphere_directions(n, 64)
                        .into_iter()
                        .map(|u| (axpy(&b.center, b.radius, &u), b.radius))
                        .collect()
                } else {
                    let q = b.closest(x0);
                    vec![(q, b.radius - d)]
                }
            }
            BoundaryKind::HalfspaceCap(h) => {
                let q = h.closest(x0);
                let d = dist(&q, x0);
                vec![(q, d)]
            }
            BoundaryKind::Smooth(s) => {
                let mut scan: Vec<(usize, f64)> = s
                    .sample_dirs()
                    .iter()
                    .enumerate()
                    .map(|(i, (_, x))| (i, dist2(x, x0)))
                    .collect();
                scan.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                let dmin = scan[0].1.sqrt();
                scan.into_iter()
                    .take_while(|(_, d2)| d2.sqrt() <= dmin * 1.02)
                    .take(512)
                    .map(|(i, _)| {
                        let (u, d2) = s.refine_closest(x0, &s.sample_dirs()[i].0);
                        (s.point(&u), d2.sqrt())
                    })
                    .collect()
            }
            BoundaryKind::GraphPatch(g) => {
                let (q, _, d) = g.closest(x0);
                vec![(q, d)]
            }
            BoundaryKind::Polyline(pl) => (0..pl.len())
                .map(|i| {
                    let (a, b) = pl.segment(i);
                    let (q, d2) = polyline::closest_on_segment(x0, a, b);
                    (q.to_vec(), d2.sqrt())
                })
                .collect(),
            BoundaryKind::Mesh(m) => (0..m.faces.len())
                .map(|i| {
                    let (a, b, c) = m.face_points(i);
                    let q = mesh::closest_on_triangle(x0, a, b, c);
                    let d = dist(&q, x0);
                    (q.to_vec(), d)
                })
                .collect(),
        };
        let r = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        if !(r > 0.0) {
            return Err(Error::CenterNotInterior(x0.to_vec()));
        }
        let tol = tol.unwrap_or(1e-6 * r);
        let mut close: Vec<&(Vec<f64>, f64)> = cands.iter().filter(|c| c.1 <= r + tol).collect();
        close.sort_by(|a, b| a.1.total_cmp(&b.1));
        let merge = 1e-3 * r;
        let mut points: Vec<Point> = Vec::new();
        for (q, _) in close {
            if points.iter().all(|p| dist(p, q) > merge) {
                points.push(Point::from_vec(q.clone()));
            }
        }
        Ok(TouchingSet {
            center: Point::from_vec(x0.to_vec()),
            radius: r,
            points,
            tolerance: tol,
            full_sphere,
        })
    }

    /// Roughly uniform boundary samples with outward normals, in the
    /// shape's own frame where it has one.
    pub fn samples(&self, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        let count = count.max(2);
        match &self.kind {
            BoundaryKind::Ball(b) => sphere_directions(b.dim(), count)
                .into_iter()
                .map(|u| (axpy(&b.center, b.radius, &u), u))
                .collect(),
            BoundaryKind::Smooth(s) => sphere_directions(s.dim(), count)
                .into_iter()
                .map(|u| {
                    let g = crate::point::mat_vec(&s.frame, &u);
                    let (x, nrm, _) = s.frame_at(&g);
                    (x, nrm)
                })
                .collect(),
            BoundaryKind::Polyline(pl) => {
                let step = (pl.len() / count).max(1);
                (0..pl.len())
                    .step_by(step)
                    .map(|i| {
                        let j = (i + pl.len() - 1) % pl.len();
                        let (n1, n2) = (pl.segment_normal(i), pl.segment_normal(j));
                        (
                            pl.vertices[i].to_vec(),
                            normalized(&[n1[0] + n2[0], n1[1] + n2[1]]),
                        )
                    })
                    .collect()
            }
            BoundaryKind::Mesh(m) => {
                let normals = m.vertex_normals();
                let step = (m.vertices.len() / count).max(1);
                (0..m.vertices.len())
                    .step_by(step)
                    .map(|i| (m.vertices[i].to_vec(), normals[i].to_vec()))
                    .collect()
            }
            BoundaryKind::HalfspaceCap(h) => vec![(h.disc_center.clone(), h.normal.clone())],
            BoundaryKind::GraphPatch(g) => {
                let (x, nrm, _) = g.frame_at(&vec![0.0; g.dim() - 1]);
                vec![(x, nrm)]
            }
        }
    }

    /// Image under `x -> scale Q x + shift`.
    pub fn transformed(&self, sim: &Similarity) -> Result<Boundary> {
        let n = self.dim();
        if sim.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: sim.dim(),
            });
        }
        if !sim.is_orthogonal(1e-10) || !(sim.scale > 0.0) {
            return Err(Error::InvalidShape(
                "transform must be an orthogonal similarity".into(),
            ));
        }
        let s = sim.scale;
        let kind = match &self.kind {
            BoundaryKind::Ball(b) => {
                BoundaryKind::Ball(Ball::new(sim.apply_point(&b.center), b.radius * s)?)
            }
            BoundaryKind::HalfspaceCap(h) => {
                let nrm = sim.rotate(&h.normal);
                let c = sim.apply(&h.disc_center);
                let offset = crate::point::dot(&c, &nrm);
                BoundaryKind::HalfspaceCap(HalfspaceCap::new(
                    nrm,
                    offset,
                    Some(c),
                    h.disc_radius * s,
                )?)
            }
            BoundaryKind::Smooth(st) => BoundaryKind::Smooth(transform_star(st, sim)),
            BoundaryKind::GraphPatch(g) => {
                let profile = match &g.profile {
                    GraphProfile::Paraboloid { curvature } => GraphProfile::Paraboloid {
                        curvature: curvature / s,
                    },
                    GraphProfile::Gaussian { amp, width } => GraphProfile::Gaussian {
                        amp: amp * s,
                        width: width * s,
                    },
                    GraphProfile::Quartic { c } => GraphProfile::Quartic { c: c / (s * s * s) },
                    GraphProfile::Quadratic { curvatures } => GraphProfile::Quadratic {
                        curvatures: curvatures.iter().map(|k| k / s).collect(),
                    },
                };
                BoundaryKind::GraphPatch(GraphPatch::new(
                    sim.apply_point(&g.origin),
                    mat_mul(&sim.rotation, &g.frame),
                    g.height * s,
                    profile,
                    g.patch_radius * s,
                    (g.window.0 * s, g.window.1 * s),
                )?)
            }
            BoundaryKind::Polyline(pl) => BoundaryKind::Polyline(pl.transformed(
                |x| sim.apply(x),
                pl.source.as_ref().map(|src| src.transformed(sim)),
            )?),
            BoundaryKind::Mesh(m) => BoundaryKind::Mesh(m.transformed(
                |x| sim.apply(x),
                m.source.as_ref().map(|src| src.transformed(sim)),
            )?),
        };
        let focus = self.focus.as_ref().map(|f| Focus {
            point: sim.apply(&f.point),
            scale: f.scale * s,
        });
        Ok(Boundary::new(kind)?.with_focus(focus))
    }
}

/// Direction samples on S^{n-1}: equally spaced (n = 2), golden spiral
/// (n = 3), or the ± coordinate axes (n >= 4).
pub fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        2 => (0..count)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => star::fibonacci_sphere(count),
        _ => (0..2 * n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
                v
            })
            .collect(),
    }
}

/// Unit vector from x0 towards z.
pub fn direction(x0: &[f64], z: &[f64]) -> Vec<f64> {
    normalized(&sub(z, x0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disc() -> Boundary {
        Boundary::new(BoundaryKind::Ball(Ball::new(Point::zeros(2), 1.0).unwrap())).unwrap()
    }

    #[test]
    fn classify_unit_disc() {
        let b = unit_disc();
        assert_eq!(
            b.classify_point(&[2.0, 0.0], 1e-9).unwrap(),
            PointClass::Outside
        );
        assert_eq!(
            b.classify_point(&[0.0, 0.0], 1e-9).unwrap(),
            PointClass::Inside
        );
        assert_eq!(
            b.classify_point(&[1.0, 0.0], 1e-9).unwrap(),
            PointClass::OnBoundary
        );
    }

    #[test]
    fn touching_set_of_centred_ball_is_full() {
        let t = unit_disc().touching_set(&[0.0, 0.0], None).unwrap();
        assert!(t.full_sphere);
        assert_eq!(t.points.len(), 64);
        assert_eq!(t.radius, 1.0);
    }

    #[test]
    fn touching_set_rejects_exterior_centre() {
        assert!(matches!(
            unit_disc().touching_set(&[3.0, 0.0], None),
            Err(Error::CenterNotInterior(_))
        ));
    }
}
