//! Closed-form reference integrals over the unit sphere through the origin,
//! `S = ∂B(-e_n, 1)`:
//!
//! * `∫_S x_n/|x|^n dσ = -n ω_n / 2`
//! * `∫_S 1/|x|^{n-2} dσ = n ω_n`
//!
//! On S, `|x|² = -2 x_n`, so the first integrand equals `-1/(2|x|^{n-2})`:
//! constant for n = 2 and weakly singular at the origin otherwise. Discrete
//! routes put the origin at a vertex and grade towards it.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::constants::omega;
use super::{graded_refine_onto_source, integrate_boundary, QuadConfig, QuadratureResult};
use crate::error::{Error, Result};
use crate::geometry::{Ball, Boundary, BoundaryKind, Focus, Polyline, SmoothSource, TriMesh};
use crate::point::{norm, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppendixIntegrand {
    /// `x_n / |x|^n`
    Kernel,
    /// `1 / |x|^{n-2}`
    Constant,
}

impl AppendixIntegrand {
    pub fn exact(self, n: usize) -> f64 {
        let s = n as f64 * omega(n);
        match self {
            AppendixIntegrand::Kernel => -0.5 * s,
            AppendixIntegrand::Constant => s,
        }
    }

    fn eval(self, x: &[f64]) -> f64 {
        let n = x.len() as i32;
        let r = norm(x);
        match self {
            AppendixIntegrand::Kernel => x[x.len() - 1] / r.powi(n),
            AppendixIntegrand::Constant => 1.0 / r.powi(n - 2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppendixRoute {
    Polyline,
    Mesh,
    AnalyticSphere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppendixCheck {
    pub n: usize,
    pub integrand: AppendixIntegrand,
    pub route: AppendixRoute,
    /// Elements of the initial (ungraded) discretisation.
    pub elements: usize,
    pub result: QuadratureResult,
    pub exact: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

/// Checks `∫_S x_n/|x|^n dσ = -n ω_n/2`. `resolution` is the segment count
/// for n = 2 and the approximate triangle count for n = 3; larger n use the
/// analytic sphere.
pub fn reference_appendix_integral(n: usize, resolution: usize) -> Result<AppendixCheck> {
    appendix_integral(n, resolution, AppendixIntegrand::Kernel, n <= 3)
}

pub fn appendix_integral(
    n: usize,
    resolution: usize,
    integrand: AppendixIntegrand,
    discrete: bool,
) -> Result<AppendixCheck> {
    if n < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: n,
        });
    }
    let mut center = vec![0.0; n];
    center[n - 1] = -1.0;
    let ball = Ball::new(Point::from_vec(center.clone()), 1.0)?;
    let cfg = QuadConfig {
        grading: 0.25,
        ..Default::default()
    };
    let origin = vec![0.0; n];
    let (route, elements, b) = match (n, discrete) {
        (2, true) => {
            let m = resolution.max(8);
            let verts: Vec<[f64; 2]> = (0..m)
                .map(|k| {
                    let a = 0.5 * PI + 2.0 * PI * k as f64 / m as f64;
                    [a.cos(), -1.0 + a.sin()]
                })
                .collect();
            let pl = Polyline::new(verts, Some(SmoothSource::Ball(ball)))?;
            (
                AppendixRoute::Polyline,
                m,
                Boundary::new(BoundaryKind::Polyline(pl))?,
            )
        }
        (3, true) => {
            let freq = ((resolution as f64 / 20.0).sqrt().ceil() as usize).max(1);
            let mesh =
                TriMesh::icosphere([0.0, 0.0, -1.0], 1.0, freq, Some(SmoothSource::Ball(ball)))?;
            (
                AppendixRoute::Mesh,
                20 * freq * freq,
                Boundary::new(BoundaryKind::Mesh(mesh))?,
            )
        }
        _ => (
            AppendixRoute::AnalyticSphere,
            0,
            Boundary::new(BoundaryKind::Ball(ball))?,
        ),
    };
    let graded = match route {
        // the analytic integrand is bounded in polar coordinates about the
        // origin; a tight focus only adds cancellation in x_n near the pole
        AppendixRoute::AnalyticSphere => b.with_focus(Some(Focus {
            point: origin,
            scale: 0.25,
        })),
        _ => graded_refine_onto_source(&b, &origin, &cfg)?,
    };
    let result = integrate_boundary(&graded, |x| integrand.eval(x), None, &cfg)?;
    let exact = integrand.exact(n);
    let abs_error = (result.value - exact).abs();
    Ok(AppendixCheck {
        n,
        integrand,
        route,
        elements,
        result,
        exact,
        abs_error,
        rel_error: abs_error / exact.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_in_the_plane() {
        let c = reference_appendix_integral(2, 10_000).unwrap();
        assert_eq!(c.route, AppendixRoute::Polyline);
        assert!((c.exact + PI).abs() < 1e-15);
        assert!(c.abs_error < 1e-4, "{c:?}");
    }

    #[test]
    fn analytic_sphere_all_dimensions() {
        for n in 2..=6 {
            for g in [AppendixIntegrand::Kernel, AppendixIntegrand::Constant] {
                let c = appendix_integral(n, 0, g, false).unwrap();
                assert!(c.rel_error < 1e-10, "n = {n}, {g:?}: {c:?}");
            }
        }
    }

    #[test]
    fn constant_integrand_in_the_plane_is_the_perimeter() {
        let c = appendix_integral(2, 0, AppendixIntegrand::Constant, false).unwrap();
        assert!(c.abs_error < 1e-12);
    }

    #[test]
    fn kernel_on_a_coarse_mesh() {
        let c = reference_appendix_integral(3, 2000).unwrap();
        assert_eq!(c.route, AppendixRoute::Mesh);
        assert!(c.rel_error < 1e-2, "{c:?}");
    }
}
