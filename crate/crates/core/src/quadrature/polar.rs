//! Polar graded rules on analytic boundaries.
//!
//! The boundary is parametrised by geodesic-polar coordinates `(s, v)`
//! around a pole (the foot point of the focus): `v` runs over unit tangent
//! directions at the pole and `s` along the ray. Radial panels are uniform
//! of size `h0` inside the focus scale and grow geometrically outside it,
//! so the near-singular peak of width `d` is resolved at any `d`.
//!
//! For n >= 4 the angular integral over S^{n-2} is reduced to one angle
//! `β` about a hint direction, which is exact when the integrand is
//! invariant under rotations fixing the pole axis and the hint.

use rayon::prelude::*;
use std::f64::consts::PI;

use super::constants::sigma;
use super::rules::{pairwise_sum, UnitRule};
use super::{QuadConfig, QuadratureResult, Region};
use crate::error::{Error, Result};
use crate::geometry::{Boundary, BoundaryKind, GraphPatch, HalfspaceCap, StarShaped};
use crate::point::{
    complement_basis, dist, dot, mat_t_vec, mat_vec, norm, normalized, reject, sub,
};

enum Chart<'a> {
    Sphere {
        center: Vec<f64>,
        radius: f64,
        e: Vec<f64>,
    },
    Star {
        shape: &'a StarShaped,
        e: Vec<f64>,
    },
    Plane {
        pole: Vec<f64>,
        cap: &'a HalfspaceCap,
    },
    Graph {
        yp: Vec<f64>,
        patch: &'a GraphPatch,
    },
}

impl Chart<'_> {
    fn new<'a>(b: &'a Boundary, pole: &[f64]) -> Chart<'a> {
        match b.kind() {
            BoundaryKind::Ball(ball) => Chart::Sphere {
                center: ball.center.to_vec(),
                radius: ball.radius,
                e: normalized(&sub(pole, &ball.center)),
            },
            BoundaryKind::Smooth(s) => Chart::Star {
                shape: s,
                e: s.direction_of(pole).expect("pole differs from centre"),
            },
            BoundaryKind::HalfspaceCap(h) => Chart::Plane {
                pole: pole.to_vec(),
                cap: h,
            },
            BoundaryKind::GraphPatch(g) => Chart::Graph {
                yp: g.to_local(pole).0,
                patch: g,
            },
            BoundaryKind::Polyline(_) | BoundaryKind::Mesh(_) => unreachable!("element kinds"),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Chart::Sphere { e, .. } | Chart::Star { e, .. } => e.len(),
            Chart::Plane { cap, .. } => cap.dim(),
            Chart::Graph { patch, .. } => patch.dim(),
        }
    }

    /// Orthonormal basis of the ray-direction space, starting near `hint`.
    fn tangent_basis(&self, hint: Option<&[f64]>) -> Vec<Vec<f64>> {
        match self {
            Chart::Sphere { e, .. } | Chart::Star { e, .. } => complement_basis(e, hint),
            Chart::Plane { cap, .. } => complement_basis(&cap.normal, hint),
            Chart::Graph { patch, .. } => {
                let m = patch.dim() - 1;
                if m == 1 {
                    return vec![vec![1.0]];
                }
                // work in R^{m+1} with the graph axis as the excluded direction
                let axis = crate::point::Point::unit(m + 1, m).into_vec();
                let local_hint = hint.map(|h| mat_t_vec(&patch.frame, h));
                complement_basis(&axis, local_hint.as_deref())
                    .into_iter()
                    .map(|mut v| {
                        v.pop();
                        v
                    })
                    .collect()
            }
        }
    }

    /// Parameter units per unit of arc length at the pole.
    fn lambda(&self) -> f64 {
        match self {
            Chart::Sphere { radius, .. } => 1.0 / radius,
            Chart::Star { shape, e } => {
                let (rho, g) = shape.rho_and_grad(e);
                1.0 / (rho * rho + crate::point::norm2(&g)).sqrt()
            }
            Chart::Plane { .. } => 1.0,
            Chart::Graph { yp, patch } => 1.0 / patch.frame_at(yp).2,
        }
    }

    /// Largest panel in parameter units.
    fn hmax(&self) -> f64 {
        match self {
            Chart::Sphere { .. } | Chart::Star { .. } => PI / 16.0,
            Chart::Plane { cap, .. } => cap.disc_radius / 16.0,
            Chart::Graph { patch, .. } => patch.patch_radius / 16.0,
        }
    }

    fn s_max(&self, v: &[f64]) -> f64 {
        match self {
            Chart::Sphere { .. } | Chart::Star { .. } => PI,
            Chart::Plane { pole, cap } => cap.ray_extent(pole, v),
            Chart::Graph { yp, patch } => {
                let b = dot(yp, v);
                let c = dot(yp, yp) - patch.patch_radius * patch.patch_radius;
                (-b + (b * b - c).max(0.0).sqrt()).max(0.0)
            }
        }
    }

    /// Boundary point and area density `dσ = J ds dv`.
    fn eval(&self, s: f64, v: &[f64]) -> (Vec<f64>, f64) {
        let n = self.dim() as i32;
        match self {
            Chart::Sphere { center, radius, e } => {
                let (sn, cs) = s.sin_cos();
                let x = center
                    .iter()
                    .zip(e.iter().zip(v))
                    .map(|(c, (a, b))| c + radius * (cs * a + sn * b))
                    .collect();
                (x, radius.powi(n - 1) * sn.powi(n - 2))
            }
            Chart::Star { shape, e } => {
                let (sn, cs) = s.sin_cos();
                let u: Vec<f64> = e.iter().zip(v).map(|(a, b)| cs * a + sn * b).collect();
                let (x, _, a) = shape.frame_at(&u);
                (x, a * sn.powi(n - 2))
            }
            Chart::Plane { pole, .. } => (
                pole.iter().zip(v).map(|(p, d)| p + s * d).collect(),
                s.powi(n - 2),
            ),
            Chart::Graph { yp, patch } => {
                let y: Vec<f64> = yp.iter().zip(v).map(|(p, d)| p + s * d).collect();
                let (x, _, a) = patch.frame_at(&y);
                (x, a * s.powi(n - 2))
            }
        }
    }

    /// Maps a ray direction (in basis coordinates) to the chart's v-space.
    fn direction(&self, basis: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
        let len = basis[0].len();
        let mut v = vec![0.0; len];
        for (b, ci) in basis.iter().zip(c) {
            for k in 0..len {
                v[k] += ci * b[k];
            }
        }
        v
    }
}

/// Ray directions (in tangent-basis coordinates) and their weights.
fn angular_rule(n: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    match n {
        2 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        3 => (0..m)
            .map(|j| {
                let a = 2.0 * PI * j as f64 / m as f64;
                (vec![a.cos(), a.sin()], 2.0 * PI / m as f64)
            })
            .collect(),
        _ => {
            let rule = UnitRule::gauss(m);
            let s = sigma(n - 2);
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(u, w)| {
                    let b = PI * u;
                    let mut c = vec![0.0; n - 1];
                    c[0] = b.cos();
                    c[1] = b.sin();
                    (c, s * b.sin().powi(n as i32 - 3) * PI * w)
                })
                .collect()
        }
    }
}

fn panel_breaks(s_max: f64, h0: f64, core: f64, growth: f64, hmax: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut s = 0.0;
    while s < s_max {
        let h = if s < core { h0 } else { (growth * s).max(h0) }.min(hmax);
        s += h;
        if s >= s_max - 1e-3 * h {
            s = s_max;
        }
        b.push(s);
    }
    b
}

struct RuleParams {
    angular: usize,
    grading: f64,
    hmax: f64,
}

#[allow(clippy::too_many_arguments)]
fn integrate_rule<F: Fn(&[f64]) -> f64 + Sync>(
    chart: &Chart<'_>,
    basis: &[Vec<f64>],
    f: &F,
    region: Option<&Region>,
    scale: f64,
    p: &RuleParams,
    order: usize,
) -> Result<(f64, usize)> {
    let n = chart.dim();
    let lam = chart.lambda();
    let gl = UnitRule::gauss(order);
    let core = scale * lam;
    let h0 = p.grading * core;
    let rays = angular_rule(n, p.angular);
    let in_ball = |x: &[f64]| region.is_none_or(|r| dist(x, &r.center) < r.radius);
    let complement = region.is_some_and(|r| r.complement);
    let one_ray = |(c, w): &(Vec<f64>, f64)| -> Result<(f64, usize)> {
        let v = chart.direction(basis, c);
        let smax = chart.s_max(&v);
        let breaks = panel_breaks(smax, h0, core, p.grading, p.hmax);
        let mut vals = Vec::with_capacity(breaks.len() * order);
        let mut evals = 0;
        // the ray leaves the ball once; `exited` tracks which side we are on
        let mut exited = false;
        for win in breaks.windows(2) {
            let (mut a, mut c_end) = (win[0], win[1]);
            let mut stop = false;
            if region.is_some() && !exited {
                evals += 1;
                if !in_ball(&chart.eval(c_end, &v).0) {
                    let (mut lo, mut hi) = (a, c_end);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if in_ball(&chart.eval(mid, &v).0) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                        if hi - lo <= 1e-15 * hi {
                            break;
                        }
                    }
                    evals += 60;
                    exited = true;
                    if complement {
                        a = 0.5 * (lo + hi);
                    } else {
                        c_end = 0.5 * (lo + hi);
                        stop = true;
                    }
                } else if complement {
                    continue;
                }
            }
            let h = c_end - a;
            for (u, wt) in gl.nodes.iter().zip(&gl.weights) {
                let (x, jac) = chart.eval(a + h * u, &v);
                let fx = f(&x);
                if !fx.is_finite() {
                    return Err(Error::NonFiniteIntegrand(x));
                }
                vals.push(fx * jac * h * wt);
            }
            evals += order;
            if stop {
                break;
            }
        }
        Ok((w * pairwise_sum(&vals), evals))
    };
    let parts: Vec<(f64, usize)> = if rays.len() > 2 {
        rays.par_iter().map(one_ray).collect::<Result<_>>()?
    } else {
        rays.iter().map(one_ray).collect::<Result<_>>()?
    };
    let vals: Vec<f64> = parts.iter().map(|p| p.0).collect();
    Ok((pairwise_sum(&vals), parts.iter().map(|p| p.1).sum()))
}

/// Default pole when no focus is set.
fn default_pole(b: &Boundary) -> Vec<f64> {
    match b.kind() {
        BoundaryKind::Ball(ball) => {
            let mut x = ball.center.to_vec();
            x[0] += ball.radius;
            x
        }
        BoundaryKind::Smooth(s) => {
            s.point(&mat_vec(&s.frame, &crate::point::Point::unit(s.dim(), 0)))
        }
        BoundaryKind::HalfspaceCap(h) => h.disc_center.clone(),
        BoundaryKind::GraphPatch(g) => g.frame_at(&vec![0.0; g.dim() - 1]).0,
        _ => unreachable!("element kinds"),
    }
}

pub(crate) fn integrate_analytic<F: Fn(&[f64]) -> f64 + Sync>(
    b: &Boundary,
    f: &F,
    region: Option<&Region>,
    cfg: &QuadConfig,
) -> Result<QuadratureResult> {
    let (mut pole, mut scale, focus_pt) = match b.focus() {
        Some(fc) => (b.closest(&fc.point).point, fc.scale, Some(fc.point.clone())),
        None => (default_pole(b), b.length_scale(), None),
    };
    if let Some(r) = region {
        let zc = b.closest(&r.center).point;
        if dist(&pole, &r.center) > 0.5 * r.radius || focus_pt.is_none() {
            pole = zc;
        }
        if focus_pt.is_none() {
            scale = r.radius / 8.0;
        }
        if dist(&pole, &r.center) >= r.radius {
            // the ball misses the boundary
            return if r.complement {
                integrate_analytic(b, f, None, cfg)
            } else {
                Ok(QuadratureResult::zero())
            };
        }
    }
    let chart = Chart::new(b, &pole);
    // hint for the angular basis: towards the region centre or the focus
    let hint_src = region.map(|r| r.center.clone()).or(focus_pt);
    let hint = hint_src.and_then(|h| {
        let d = sub(&h, &pole);
        let nrm = b.closest(&pole).normal;
        let t = reject(&d, &nrm);
        (norm(&t) > 1e-12 * b.length_scale()).then_some(t)
    });
    let basis = chart.tangent_basis(hint.as_deref());
    let mut hmax = chart.hmax();
    if let Some(r) = region {
        hmax = hmax.min(0.25 * r.radius * chart.lambda());
    }
    let order = cfg.rule.line_order();
    let coarse = RuleParams {
        angular: cfg.angular.max(4),
        grading: cfg.grading,
        hmax,
    };
    let fine = RuleParams {
        angular: 2 * cfg.angular.max(4),
        grading: 0.5 * cfg.grading,
        hmax: 0.5 * hmax,
    };
    let (vc, ec) = integrate_rule(&chart, &basis, f, region, scale, &coarse, order)?;
    let (vf, ef) = integrate_rule(&chart, &basis, f, region, scale, &fine, order)?;
    Ok(QuadratureResult {
        value: vf,
        error_estimate: (vf - vc).abs(),
        evaluations: ec + ef,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_shape, ShapeKind};
    use crate::quadrature::{graded_refine, integrate_boundary};
    use approx::assert_relative_eq;

    fn ball(n: usize) -> Boundary {
        make_shape(
            &ShapeKind::Ball {
                n,
                center: None,
                radius: 1.0,
                segments: None,
                frequency: None,
            }
            .into(),
        )
        .unwrap()
    }

    #[test]
    fn sphere_areas_all_dimensions() {
        let cfg = QuadConfig::default();
        for n in 2..=6 {
            let r = integrate_boundary(&ball(n), |_| 1.0, None, &cfg).unwrap();
            assert_relative_eq!(r.value, sigma(n), max_relative = 1e-12);
        }
    }

    #[test]
    fn spherical_cap_area() {
        // cap of the unit sphere inside B(z, R): area 2π h with h = R²/2
        let cfg = QuadConfig::default();
        let reg = Region::ball(&[0.0, 0.0, 1.0], 0.3);
        let r = integrate_boundary(&ball(3), |_| 1.0, Some(&reg), &cfg).unwrap();
        assert_relative_eq!(r.value, PI * 0.09, max_relative = 1e-12);
        let out = integrate_boundary(
            &ball(3),
            |_| 1.0,
            Some(&Region::outside(&[0.0, 0.0, 1.0], 0.3)),
            &cfg,
        )
        .unwrap();
        assert_relative_eq!(out.value, 4.0 * PI - PI * 0.09, max_relative = 1e-12);
    }

    #[test]
    fn near_singular_poisson_kernel_on_sphere() {
        // exterior Poisson-type identity: ∫ (|α|² - 1)/|x - α|³ dσ = 4π/|α| for |α| > 1
        let cfg = QuadConfig::default();
        for t in [1e-1, 1e-3, 1e-6] {
            let alpha = [0.0, 0.0, 1.0 + t];
            let b = graded_refine(&ball(3), &alpha, &cfg).unwrap();
            let a2 = crate::point::norm2(&alpha);
            let f = |x: &[f64]| (a2 - 1.0) / crate::point::dist(x, &alpha).powi(3);
            let r = integrate_boundary(&b, f, None, &cfg).unwrap();
            assert_relative_eq!(r.value, 4.0 * PI / (1.0 + t), max_relative = 1e-9);
            assert!(r.error_estimate < 1e-6 * r.value);
        }
    }
}
