//! Per-element rules on polylines and triangle meshes, with exact segment
//! clipping and subdivision-based triangle clipping against a ball.

use rayon::prelude::*;

use super::rules::{reduce_sum, ElementRule, TriangleRule, UnitRule, TRI_SIX, TRI_THREE};
use super::{QuadConfig, QuadratureResult, Region};
use crate::error::{Error, Result};
use crate::geometry::mesh::closest_on_triangle;
use crate::geometry::{Polyline, TriMesh};
use crate::point::dist;

fn check(fx: f64, x: &[f64]) -> Result<f64> {
    if fx.is_finite() {
        Ok(fx)
    } else {
        Err(Error::NonFiniteIntegrand(x.to_vec()))
    }
}

/// Coarse and fine (each element halved) values over segment `[t0, t1]`.
fn segment_pair<F: Fn(&[f64]) -> f64>(
    a: &[f64; 2],
    b: &[f64; 2],
    t0: f64,
    t1: f64,
    f: &F,
    rule: &UnitRule,
) -> Result<(f64, f64)> {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let sweep = |lo: f64, hi: f64| -> Result<f64> {
        let mut s = 0.0;
        for (u, w) in rule.nodes.iter().zip(&rule.weights) {
            let x = at(lo + (hi - lo) * u);
            s += w * check(f(&x), &x)?;
        }
        Ok(s * (hi - lo) * len)
    };
    let coarse = sweep(t0, t1)?;
    let mid = 0.5 * (t0 + t1);
    Ok((coarse, sweep(t0, mid)? + sweep(mid, t1)?))
}

pub(crate) fn integrate_polyline<F: Fn(&[f64]) -> f64 + Sync>(
    pl: &Polyline,
    f: &F,
    region: Option<&Region>,
    cfg: &QuadConfig,
) -> Result<QuadratureResult> {
    let rule = UnitRule::gauss(cfg.rule.line_order());
    let segs: Vec<(usize, f64, f64)> = match region {
        None => (0..pl.len()).map(|i| (i, 0.0, 1.0)).collect(),
        Some(r) if !r.complement => pl
            .segments_near(&r.center, r.radius)
            .into_iter()
            .filter_map(|i| {
                pl.clip_segment(i, &r.center, r.radius)
                    .map(|(t0, t1)| (i, t0, t1))
            })
            .collect(),
        Some(r) => (0..pl.len())
            .flat_map(|i| match pl.clip_segment(i, &r.center, r.radius) {
                None => vec![(i, 0.0, 1.0)],
                Some((t0, t1)) => [(i, 0.0, t0), (i, t1, 1.0)]
                    .into_iter()
                    .filter(|s| s.2 > s.1)
                    .collect(),
            })
            .collect(),
    };
    let pairs: Vec<(f64, f64)> = segs
        .par_iter()
        .map(|&(i, t0, t1)| {
            let (a, b) = pl.segment(i);
            segment_pair(a, b, t0, t1, f, &rule)
        })
        .collect::<Result<_>>()?;
    let coarse = reduce_sum(
        &pairs.iter().map(|p| p.0).collect::<Vec<_>>(),
        cfg.deterministic,
    );
    let fine = reduce_sum(
        &pairs.iter().map(|p| p.1).collect::<Vec<_>>(),
        cfg.deterministic,
    );
    Ok(QuadratureResult {
        value: fine,
        error_estimate: (fine - coarse).abs(),
        evaluations: segs.len() * rule.nodes.len() * 3,
    })
}

type Tri = [[f64; 3]; 3];

fn tri_rule(rule: ElementRule) -> &'static TriangleRule {
    match rule {
        ElementRule::Centroid3 => &TRI_THREE,
        ElementRule::Gauss4 | ElementRule::Gauss8 => &TRI_SIX,
    }
}

fn area(t: &Tri) -> f64 {
    let u = [t[1][0] - t[0][0], t[1][1] - t[0][1], t[1][2] - t[0][2]];
    let v = [t[2][0] - t[0][0], t[2][1] - t[0][1], t[2][2] - t[0][2]];
    0.5 * crate::point::norm(&crate::point::cross3(&u, &v))
}

fn split4(t: &Tri) -> [Tri; 4] {
    let m = |a: &[f64; 3], b: &[f64; 3]| {
        [
            0.5 * (a[0] + b[0]),
            0.5 * (a[1] + b[1]),
            0.5 * (a[2] + b[2]),
        ]
    };
    let (ab, bc, ca) = (m(&t[0], &t[1]), m(&t[1], &t[2]), m(&t[2], &t[0]));
    [[t[0], ab, ca], [ab, t[1], bc], [ca, bc, t[2]], [ab, bc, ca]]
}

fn apply_rule<F: Fn(&[f64]) -> f64>(t: &Tri, f: &F, rule: &TriangleRule) -> Result<f64> {
    let mut s = 0.0;
    for (l, w) in rule.bary.iter().zip(rule.weights) {
        let x: [f64; 3] = std::array::from_fn(|k| l[0] * t[0][k] + l[1] * t[1][k] + l[2] * t[2][k]);
        s += w * check(f(&x), &x)?;
    }
    Ok(s * area(t))
}

/// Coarse and once-split values over the part of `t` inside the region.
fn triangle_pair<F: Fn(&[f64]) -> f64>(
    t: &Tri,
    f: &F,
    rule: &TriangleRule,
    region: Option<&Region>,
    clip_diam: f64,
) -> Result<(f64, f64, usize)> {
    if let Some(r) = region {
        let inside = |p: &[f64; 3]| dist(p, &r.center) < r.radius;
        let all_in = t.iter().all(inside);
        let q = closest_on_triangle(&r.center, &t[0], &t[1], &t[2]);
        let all_out = dist(&q, &r.center) >= r.radius;
        if (all_in && r.complement) || (all_out && !r.complement) {
            return Ok((0.0, 0.0, 0));
        }
        if !all_in && !all_out {
            let diam = (0..3)
                .map(|k| dist(&t[k], &t[(k + 1) % 3]))
                .fold(0.0, f64::max);
            if diam > clip_diam {
                let mut acc = (0.0, 0.0, 0);
                for c in split4(t) {
                    let (a, b, e) = triangle_pair(&c, f, rule, region, clip_diam)?;
                    acc = (acc.0 + a, acc.1 + b, acc.2 + e);
                }
                return Ok(acc);
            }
            let cen: [f64; 3] = std::array::from_fn(|k| (t[0][k] + t[1][k] + t[2][k]) / 3.0);
            if !r.contains(&cen) {
                return Ok((0.0, 0.0, 0));
            }
        }
    }
    let coarse = apply_rule(t, f, rule)?;
    let mut fine = 0.0;
    for c in split4(t) {
        fine += apply_rule(&c, f, rule)?;
    }
    Ok((coarse, fine, 5 * rule.weights.len()))
}

pub(crate) fn integrate_mesh<F: Fn(&[f64]) -> f64 + Sync>(
    m: &TriMesh,
    f: &F,
    region: Option<&Region>,
    cfg: &QuadConfig,
) -> Result<QuadratureResult> {
    let rule = tri_rule(cfg.rule);
    let faces: Vec<usize> = match region {
        None => (0..m.faces.len()).collect(),
        Some(r) if !r.complement => m.faces_near(&r.center, r.radius),
        Some(_) => (0..m.faces.len()).collect(),
    };
    let clip_diam = region.map_or(f64::INFINITY, |r| cfg.clip_tol * r.radius);
    let parts: Vec<(f64, f64, usize)> = faces
        .par_iter()
        .map(|&i| {
            let (a, b, c) = m.face_points(i);
            triangle_pair(&[*a, *b, *c], f, rule, region, clip_diam)
        })
        .collect::<Result<_>>()?;
    let coarse = reduce_sum(
        &parts.iter().map(|p| p.0).collect::<Vec<_>>(),
        cfg.deterministic,
    );
    let fine = reduce_sum(
        &parts.iter().map(|p| p.1).collect::<Vec<_>>(),
        cfg.deterministic,
    );
    Ok(QuadratureResult {
        value: fine,
        error_estimate: (fine - coarse).abs(),
        evaluations: parts.iter().map(|p| p.2).sum(),
    })
}
