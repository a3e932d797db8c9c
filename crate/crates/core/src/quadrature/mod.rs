//! Boundary integration, grading, limit extrapolation and closed-form
//! reference integrals.

pub mod appendix;
pub mod constants;
pub mod elements;
pub mod extrapolate;
pub mod polar;
pub mod rules;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{Boundary, BoundaryKind, Focus};

pub use appendix::{reference_appendix_integral, AppendixCheck, AppendixIntegrand};
pub use constants::{omega, sigma, Constants};
pub use extrapolate::{
    extrapolate_limit, extrapolate_limit_with, extrapolate_limit_with_errors, ExtrapolationOptions,
    LimitEstimate, LimitStatus, Model,
};
pub use rules::ElementRule;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

impl QuadratureResult {
    pub fn zero() -> Self {
        QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        }
    }

    pub fn scaled(self, s: f64) -> Self {
        QuadratureResult {
            value: self.value * s,
            error_estimate: self.error_estimate * s.abs(),
            evaluations: self.evaluations,
        }
    }
}

/// Dyadic parameter ladders, relative to the touching radius r.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub t0: f64,
    pub k_max: usize,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub j_max: usize,
}

impl Default for Ladder {
    fn default() -> Self {
        Ladder {
            t0: 0.1,
            k_max: 10,
            r0: 0.5,
            j_max: 6,
        }
    }
}

impl Ladder {
    /// `t_k = t0 r 2^{-k}`, k = 0..=k_max.
    pub fn approach(&self, r: f64) -> Vec<f64> {
        (0..=self.k_max)
            .map(|k| self.t0 * r * 0.5f64.powi(k as i32))
            .collect()
    }

    /// `R_j = R0 r 2^{-j}`, j = 0..=j_max.
    pub fn radii(&self, r: f64) -> Vec<f64> {
        (0..=self.j_max)
            .map(|j| self.r0 * r * 0.5f64.powi(j as i32))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    /// Default element count when a smooth shape is discretised.
    pub elements: usize,
    /// Panel (or element) size relative to the distance from the focus.
    pub grading: f64,
    pub rule: ElementRule,
    pub ladder: Ladder,
    /// Rays of the coarse polar rule on S^{n-2}; the fine rule doubles it.
    pub angular: usize,
    /// Mesh clipping stops at sub-elements of diameter `clip_tol · R`.
    pub clip_tol: f64,
    /// Element sums in a fixed pairwise order (polar rules always are);
    /// false lets rayon choose the association.
    pub deterministic: bool,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            elements: 4096,
            grading: 0.125,
            rule: ElementRule::Gauss4,
            ladder: Ladder::default(),
            angular: 32,
            clip_tol: 1e-3,
            deterministic: true,
        }
    }
}

/// Integration region `B(center, radius)`, or its complement.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub center: Vec<f64>,
    pub radius: f64,
    pub complement: bool,
}

impl Region {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        Region {
            center: center.to_vec(),
            radius,
            complement: false,
        }
    }

    pub fn outside(center: &[f64], radius: f64) -> Self {
        Region {
            center: center.to_vec(),
            radius,
            complement: true,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (crate::point::dist(x, &self.center) < self.radius) != self.complement
    }
}

/// `∫_{∂Ω ∩ region} f dσ`, reporting the finer of two nested rules and
/// their difference as the error estimate.
pub fn integrate_boundary<F>(
    b: &Boundary,
    f: F,
    region: Option<&Region>,
    cfg: &QuadConfig,
) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if let Some(r) = region {
        if r.radius <= 0.0 {
            return if r.complement {
                integrate_boundary(b, f, None, cfg)
            } else {
                Ok(QuadratureResult::zero())
            };
        }
    }
    match b.kind() {
        BoundaryKind::Polyline(pl) => elements::integrate_polyline(pl, &f, region, cfg),
        BoundaryKind::Mesh(m) => elements::integrate_mesh(m, &f, region, cfg),
        _ => polar::integrate_analytic(b, &f, region, cfg),
    }
}

/// Grades `b` towards `near`: element (or polar panel) size at distance d
/// from `near` is at most `grading · max(d, dist(near, ∂Ω))`. Discrete
/// boundaries keep their geometry; new vertices lie on existing elements.
pub fn graded_refine(b: &Boundary, near: &[f64], cfg: &QuadConfig) -> Result<Boundary> {
    graded_refine_impl(b, near, cfg, false)
}

/// As [`graded_refine`], but new vertices of a discretised smooth shape
/// are projected onto it, so the result converges to the smooth surface.
pub fn graded_refine_onto_source(b: &Boundary, near: &[f64], cfg: &QuadConfig) -> Result<Boundary> {
    graded_refine_impl(b, near, cfg, true)
}

fn graded_refine_impl(
    b: &Boundary,
    near: &[f64],
    cfg: &QuadConfig,
    project: bool,
) -> Result<Boundary> {
    let floor = 1e-9 * b.length_scale();
    let scale = b.distance(near).max(floor);
    let h_min = cfg.grading * scale;
    let focus = Some(Focus {
        point: near.to_vec(),
        scale,
    });
    let kind = match b.kind() {
        BoundaryKind::Polyline(pl) => {
            BoundaryKind::Polyline(pl.graded(near, cfg.grading, h_min, project))
        }
        BoundaryKind::Mesh(m) => BoundaryKind::Mesh(m.graded(near, cfg.grading, h_min, project)),
        _ => return Ok(b.clone().with_focus(focus)),
    };
    Ok(Boundary::new(kind)?.with_focus(focus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_shape, ShapeKind};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn disc(segments: Option<usize>) -> Boundary {
        make_shape(
            &ShapeKind::Ball {
                n: 2,
                center: None,
                radius: 1.0,
                segments,
                frequency: None,
            }
            .into(),
        )
        .unwrap()
    }

    #[test]
    fn unit_circle_length() {
        let cfg = QuadConfig::default();
        let r = integrate_boundary(&disc(None), |_| 1.0, None, &cfg).unwrap();
        assert_relative_eq!(r.value, 2.0 * PI, max_relative = 1e-13);
    }

    #[test]
    fn graded_polyline_halves_towards_focus() {
        let cfg = QuadConfig {
            grading: 0.5,
            ..Default::default()
        };
        let b = graded_refine(&disc(Some(64)), &[1.0, 0.0], &cfg).unwrap();
        let BoundaryKind::Polyline(pl) = b.kind() else {
            panic!()
        };
        for i in 0..pl.len() {
            let (a, c) = pl.segment(i);
            let d = polyline_dist(&[1.0, 0.0], a, c);
            assert!(
                pl.segment_length(i)
                    <= (0.5 * d).max(0.5 * 1e-9 * b.length_scale()) * (1.0 + 1e-12)
            );
        }
    }

    fn polyline_dist(p: &[f64], a: &[f64; 2], b: &[f64; 2]) -> f64 {
        crate::geometry::polyline::closest_on_segment(p, a, b)
            .1
            .sqrt()
    }

    #[test]
    fn empty_region_integrates_to_zero() {
        let cfg = QuadConfig::default();
        let reg = Region::ball(&[1.0, 0.0], 0.0);
        let r = integrate_boundary(&disc(None), |_| 1.0, Some(&reg), &cfg).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn ladders_are_dyadic() {
        let l = Ladder::default();
        let t = l.approach(2.0);
        assert_eq!(t.len(), 11);
        assert_relative_eq!(t[0], 0.2);
        assert_relative_eq!(t[10], 0.2 / 1024.0);
        assert_eq!(l.radii(1.0).len(), 7);
    }
}
