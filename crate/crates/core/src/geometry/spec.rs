//! JSON shape descriptions and their construction.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use super::{
    io, Ball, Boundary, BoundaryKind, GraphPatch, GraphProfile, HalfspaceCap, Polyline, RadialFn,
    SmoothSource, StarShaped, TriMesh,
};
use crate::error::{Error, Result};
use crate::point::{identity_matrix, Point, Similarity};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereHarmonic {
    Zonal,
    Cubic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeKind {
    Ball {
        n: usize,
        #[serde(default)]
        center: Option<Vec<f64>>,
        radius: f64,
        /// Discretise a disc into this many polyline segments.
        #[serde(default)]
        segments: Option<usize>,
        /// Discretise a 3-ball into an icosphere of this frequency.
        #[serde(default)]
        frequency: Option<usize>,
    },
    Ellipse {
        #[serde(default)]
        center: Option<Vec<f64>>,
        semi_axes: [f64; 2],
        #[serde(default)]
        angle: f64,
        #[serde(default)]
        segments: Option<usize>,
    },
    Ellipsoid {
        #[serde(default)]
        center: Option<Vec<f64>>,
        semi_axes: [f64; 3],
        #[serde(default)]
        frequency: Option<usize>,
    },
    /// `r(θ) = radius (1 + amplitude cos(k θ + phase))`.
    PerturbedCircle {
        #[serde(default)]
        center: Option<Vec<f64>>,
        radius: f64,
        amplitude: f64,
        k: u32,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        segments: Option<usize>,
    },
    /// `r(u) = radius (1 + amplitude Y(u))` with a zonal Legendre or cubic harmonic Y.
    PerturbedSphere {
        #[serde(default)]
        center: Option<Vec<f64>>,
        radius: f64,
        amplitude: f64,
        #[serde(default = "default_harmonic")]
        harmonic: SphereHarmonic,
        #[serde(default = "default_degree")]
        degree: u32,
        #[serde(default)]
        frequency: Option<usize>,
    },
    Polyline {
        #[serde(default)]
        points: Option<Vec<[f64; 2]>>,
        #[serde(default)]
        path: Option<PathBuf>,
    },
    Mesh {
        #[serde(default)]
        path: Option<PathBuf>,
        #[serde(default)]
        vertices: Option<Vec<[f64; 3]>>,
        #[serde(default)]
        faces: Option<Vec<[usize; 3]>>,
    },
    HalfspaceCap {
        n: usize,
        /// Outward normal; defaults to e_n.
        #[serde(default)]
        normal: Option<Vec<f64>>,
        #[serde(default)]
        offset: f64,
        bounding_radius: f64,
        #[serde(default)]
        disc_center: Option<Vec<f64>>,
    },
    GraphPatch {
        n: usize,
        #[serde(default)]
        origin: Option<Vec<f64>>,
        height: f64,
        profile: GraphProfile,
        patch_radius: f64,
        window: [f64; 2],
    },
}

fn default_harmonic() -> SphereHarmonic {
    SphereHarmonic::Zonal
}

fn default_degree() -> u32 {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    #[serde(flatten)]
    pub kind: ShapeKind,
    /// Similarity applied after construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<Similarity>,
}

impl From<ShapeKind> for ShapeSpec {
    fn from(kind: ShapeKind) -> Self {
        ShapeSpec {
            kind,
            transform: None,
        }
    }
}

/// Builds a boundary; relative file paths resolve against the working directory.
pub fn make_shape(spec: &ShapeSpec) -> Result<Boundary> {
    make_shape_in(spec, None)
}

/// As [`make_shape`], resolving relative paths against `base`.
pub fn make_shape_in(spec: &ShapeSpec, base: Option<&Path>) -> Result<Boundary> {
    let b = build(&spec.kind, base)?;
    match &spec.transform {
        Some(t) => b.transformed(t),
        None => Ok(b),
    }
}

fn center_or_origin(c: &Option<Vec<f64>>, n: usize) -> Result<Point> {
    match c {
        Some(v) if v.len() != n => Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        }),
        Some(v) => Point::new(v.clone()),
        None => Ok(Point::zeros(n)),
    }
}

fn star_polyline(s: StarShaped, segments: usize) -> Result<Boundary> {
    if segments < 3 {
        return Err(Error::InvalidShape("need at least 3 segments".into()));
    }
    let verts = (0..segments)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / segments as f64;
            let g = crate::point::mat_vec(&s.frame, &[t.cos(), t.sin()]);
            let x = s.point(&g);
            [x[0], x[1]]
        })
        .collect();
    Boundary::new(BoundaryKind::Polyline(Polyline::new(
        verts,
        Some(SmoothSource::Star(s)),
    )?))
}

fn star_mesh(s: StarShaped, freq: usize) -> Result<Boundary> {
    let unit = TriMesh::icosphere([0.0; 3], 1.0, freq, None)?;
    let verts = unit
        .vertices
        .iter()
        .map(|u| {
            let x = s.point(u);
            [x[0], x[1], x[2]]
        })
        .collect();
    Boundary::new(BoundaryKind::Mesh(TriMesh::new(
        verts,
        unit.faces,
        Some(SmoothSource::Star(s)),
    )?))
}

fn star_boundary(
    s: StarShaped,
    segments: Option<usize>,
    frequency: Option<usize>,
) -> Result<Boundary> {
    match (s.dim(), segments, frequency) {
        (2, Some(m), _) => star_polyline(s, m),
        (3, _, Some(f)) => star_mesh(s, f),
        _ => Boundary::new(BoundaryKind::Smooth(s)),
    }
}

fn resolve(path: &Path, base: Option<&Path>) -> PathBuf {
    match base {
        Some(b) if path.is_relative() => b.join(path),
        _ => path.to_path_buf(),
    }
}

fn build(kind: &ShapeKind, base: Option<&Path>) -> Result<Boundary> {
    match kind {
        ShapeKind::Ball {
            n,
            center,
            radius,
            segments,
            frequency,
        } => {
            if *n < 2 {
                return Err(Error::InvalidShape("dimension must be >= 2".into()));
            }
            let ball = Ball::new(center_or_origin(center, *n)?, *radius)?;
            match (n, segments, frequency) {
                (2, Some(m), _) => {
                    if *m < 3 {
                        return Err(Error::InvalidShape("need at least 3 segments".into()));
                    }
                    let verts = (0..*m)
                        .map(|i| {
                            let t = 2.0 * PI * i as f64 / *m as f64;
                            [
                                ball.center[0] + radius * t.cos(),
                                ball.center[1] + radius * t.sin(),
                            ]
                        })
                        .collect();
                    Boundary::new(BoundaryKind::Polyline(Polyline::new(
                        verts,
                        Some(SmoothSource::Ball(ball)),
                    )?))
                }
                (3, _, Some(f)) => {
                    let c = [ball.center[0], ball.center[1], ball.center[2]];
                    Boundary::new(BoundaryKind::Mesh(TriMesh::icosphere(
                        c,
                        *radius,
                        *f,
                        Some(SmoothSource::Ball(ball)),
                    )?))
                }
                _ => Boundary::new(BoundaryKind::Ball(ball)),
            }
        }
        ShapeKind::Ellipse {
            center,
            semi_axes,
            angle,
            segments,
        } => {
            let sim = Similarity::planar(*angle, 1.0, [0.0, 0.0]);
            let s = StarShaped::new(
                center_or_origin(center, 2)?,
                sim.rotation,
                1.0,
                RadialFn::Ellipsoid {
                    semi_axes: semi_axes.to_vec(),
                },
            )?;
            star_boundary(s, *segments, None)
        }
        ShapeKind::Ellipsoid {
            center,
            semi_axes,
            frequency,
        } => {
            let s = StarShaped::new(
                center_or_origin(center, 3)?,
                identity_matrix(3),
                1.0,
                RadialFn::Ellipsoid {
                    semi_axes: semi_axes.to_vec(),
                },
            )?;
            star_boundary(s, None, *frequency)
        }
        ShapeKind::PerturbedCircle {
            center,
            radius,
            amplitude,
            k,
            phase,
            segments,
        } => {
            let s = StarShaped::new(
                center_or_origin(center, 2)?,
                identity_matrix(2),
                1.0,
                RadialFn::Harmonic {
                    base: *radius,
                    amp: *amplitude,
                    k: *k,
                    phase: *phase,
                },
            )?;
            star_boundary(s, *segments, None)
        }
        ShapeKind::PerturbedSphere {
            center,
            radius,
            amplitude,
            harmonic,
            degree,
            frequency,
        } => {
            let radial = match harmonic {
                SphereHarmonic::Zonal => RadialFn::Zonal {
                    base: *radius,
                    amp: *amplitude,
                    degree: *degree,
                },
                SphereHarmonic::Cubic => RadialFn::Cubic {
                    base: *radius,
                    amp: *amplitude,
                },
            };
            let s = StarShaped::new(
                center_or_origin(center, 3)?,
                identity_matrix(3),
                1.0,
                radial,
            )?;
            star_boundary(s, None, *frequency)
        }
        ShapeKind::Polyline { points, path } => {
            let verts = match (points, path) {
                (Some(p), None) => p.clone(),
                (None, Some(p)) => io::read_polyline_csv(&resolve(p, base))?,
                _ => {
                    return Err(Error::InvalidShape(
                        "polyline needs exactly one of `points` or `path`".into(),
                    ))
                }
            };
            Boundary::new(BoundaryKind::Polyline(Polyline::new(verts, None)?))
        }
        ShapeKind::Mesh {
            path,
            vertices,
            faces,
        } => {
            let (v, f) = match (path, vertices, faces) {
                (Some(p), None, None) => io::read_off(&resolve(p, base))?,
                (None, Some(v), Some(f)) => (v.clone(), f.clone()),
                _ => {
                    return Err(Error::InvalidShape(
                        "mesh needs either `path` or both `vertices` and `faces`".into(),
                    ))
                }
            };
            Boundary::new(BoundaryKind::Mesh(TriMesh::new(v, f, None)?))
        }
        ShapeKind::HalfspaceCap {
            n,
            normal,
            offset,
            bounding_radius,
            disc_center,
        } => {
            let nrm = match normal {
                Some(v) if v.len() != *n => {
                    return Err(Error::DimensionMismatch {
                        expected: *n,
                        got: v.len(),
                    })
                }
                Some(v) => v.clone(),
                None => Point::unit(*n, n - 1).into_vec(),
            };
            Boundary::new(BoundaryKind::HalfspaceCap(HalfspaceCap::new(
                nrm,
                *offset,
                disc_center.clone(),
                *bounding_radius,
            )?))
        }
        ShapeKind::GraphPatch {
            n,
            origin,
            height,
            profile,
            patch_radius,
            window,
        } => Boundary::new(BoundaryKind::GraphPatch(GraphPatch::new(
            center_or_origin(origin, *n)?,
            identity_matrix(*n),
            *height,
            profile.clone(),
            *patch_radius,
            (window[0], window[1]),
        )?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn parse(s: &str) -> ShapeSpec {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn ball_specs() {
        let b = make_shape(&parse(r#"{"kind":"ball","n":3,"radius":1.0}"#)).unwrap();
        assert_relative_eq!(b.surface_measure(), 4.0 * PI);
        assert_relative_eq!(b.enclosed_volume().unwrap(), 4.0 * PI / 3.0);
        let p = make_shape(&parse(
            r#"{"kind":"ball","n":2,"radius":1.0,"segments":1000}"#,
        ))
        .unwrap();
        assert_relative_eq!(p.surface_measure(), 2.0 * PI, max_relative = 1e-5);
    }

    #[test]
    fn graph_patch_spec_with_nested_profile() {
        let s = parse(
            r#"{"kind":"graph_patch","n":2,"height":1.0,"profile":{"profile":"gaussian","amp":0.1,"width":0.5},
                "patch_radius":0.5,"window":[-1.0,2.0]}"#,
        );
        let b = make_shape(&s).unwrap();
        assert!(matches!(b.enclosed_volume(), Err(Error::PatchHasNoVolume)));
    }

    #[test]
    fn invalid_radius_is_rejected() {
        assert!(make_shape(&parse(r#"{"kind":"ball","n":2,"radius":-1.0}"#)).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ShapeSpec>(
            r#"{"kind":"ball","n":2,"radius":1.0,"radus":2}"#
        )
        .is_err());
    }
}
