//! Spherical flatness index
//!
//! `S_z = 2/(n ω_n r) · liminf_{R→0} liminf_{α→z} ∫_{∂Ω∩B(z,R)} ⟨α-x, α-x0⟩/|x-α|^n dσ`
//!
//! at a touching point `z`, `r = |z - x0|`. Each liminf over `α` is sampled
//! along a fan of straight approach directions and replaced by an
//! extrapolated limit; the index is the minimum over the fan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Boundary, PointClass};
use crate::point::{axpy, complement_basis, dist, dot, normalized, sub};
use crate::quadrature::{
    extrapolate_limit_with_errors, graded_refine, integrate_boundary, omega, ExtrapolationOptions,
    LimitEstimate, LimitStatus, Model, QuadConfig, QuadratureResult, Region,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlatnessConfig {
    pub quadrature: QuadConfig,
    /// Cone rings around the normal, in degrees.
    pub cone_angles_deg: Vec<f64>,
    /// Directions per ring for n >= 3; n = 2 rings always have two.
    pub dirs_per_ring: usize,
}

impl Default for FlatnessConfig {
    fn default() -> Self {
        FlatnessConfig {
            quadrature: QuadConfig::default(),
            cone_angles_deg: vec![15.0, 30.0],
            dirs_per_ring: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    pub value: f64,
    pub z: Vec<f64>,
    pub r: f64,
    pub normal: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    /// `R_j`, decreasing.
    pub radii: Vec<f64>,
    /// `t_k`, decreasing.
    pub approach: Vec<f64>,
    /// Normalised cap integrals, indexed `[direction][j][k]`.
    pub table: Vec<Vec<Vec<f64>>>,
    /// Largest normalised quadrature error in the table.
    pub table_error: f64,
    /// Limits over `t`, indexed `[direction][j]`.
    pub inner_limits: Vec<Vec<LimitEstimate>>,
    /// Limits over `R` per direction.
    pub outer_limits: Vec<LimitEstimate>,
    /// Direction attaining the minimum.
    pub argmin_direction: usize,
    pub error_estimate: f64,
    pub flags: Vec<String>,
    /// Some limit along the minimising direction did not converge.
    pub non_convergent: bool,
}

/// `⟨α - x, α - x0⟩ / |x - α|^n`.
pub fn flatness_integrand(alpha: &[f64], x: &[f64], x0: &[f64]) -> Result<f64> {
    let n = alpha.len();
    if x.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if x.len() != n { x.len() } else { x0.len() },
        });
    }
    let d = dist(alpha, x);
    if d <= 4.0
        * f64::EPSILON
        * crate::point::norm(alpha)
            .max(crate::point::norm(x))
            .max(1.0)
    {
        return Err(Error::SingularPoint(d));
    }
    Ok(raw(alpha, x, x0))
}

#[inline]
fn raw(alpha: &[f64], x: &[f64], x0: &[f64]) -> f64 {
    let n = alpha.len() as i32;
    let mut ip = 0.0;
    let mut d2 = 0.0;
    for i in 0..alpha.len() {
        let ax = alpha[i] - x[i];
        ip += ax * (alpha[i] - x0[i]);
        d2 += ax * ax;
    }
    ip / (d2.sqrt().powi(n - 2) * d2)
}

/// `∫_{∂Ω∩B(z,R)} ⟨α-x, α-x0⟩/|x-α|^n dσ` on `b` graded towards `α`.
pub fn cap_integral(
    b: &Boundary,
    z: &[f64],
    radius: f64,
    alpha: &[f64],
    x0: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadratureResult> {
    if radius <= 0.0 {
        return Ok(QuadratureResult::zero());
    }
    let graded = graded_refine(b, alpha, cfg)?;
    integrate_boundary(
        &graded,
        |x| raw(alpha, x, x0),
        Some(&Region::ball(z, radius)),
        cfg,
    )
}

/// Normal plus rings at the cone angles; all unit vectors.
fn approach_fan(normal: &[f64], cfg: &FlatnessConfig) -> Vec<Vec<f64>> {
    let n = normal.len();
    let mut out = vec![normal.to_vec()];
    let basis = complement_basis(normal, None);
    for deg in &cfg.cone_angles_deg {
        let (s, c) = deg.to_radians().sin_cos();
        let ring: Vec<Vec<f64>> = if n == 2 {
            vec![basis[0].clone(), basis[0].iter().map(|v| -v).collect()]
        } else {
            let m = cfg.dirs_per_ring.max(1);
            (0..m)
                .map(|j| {
                    let phi = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                    let (sp, cp) = phi.sin_cos();
                    (0..n)
                        .map(|k| cp * basis[0][k] + sp * basis[1][k])
                        .collect()
                })
                .collect()
        };
        for w in ring {
            out.push(normalized(
                &(0..n).map(|k| c * normal[k] + s * w[k]).collect::<Vec<_>>(),
            ));
        }
    }
    out
}

fn flagged(status: LimitStatus) -> bool {
    matches!(
        status,
        LimitStatus::NonMonotoneTail | LimitStatus::NoConvergence
    )
}

pub fn spherical_flatness_index(
    b: &Boundary,
    x0: &[f64],
    z: &[f64],
    cfg: &FlatnessConfig,
) -> Result<IndexEstimate> {
    let n = b.dim();
    let ts = b.touching_set(x0, None)?;
    let on_boundary = b.distance(z) <= ts.tolerance;
    let r = dist(z, x0);
    if !on_boundary || (r - ts.radius).abs() > ts.tolerance {
        return Err(Error::NoTouchingPoint(z.to_vec()));
    }
    let closest = b.closest(z);
    // the inward direction at a touching point is towards x0
    let mut normal = closest.normal.clone();
    if dot(&normal, &sub(z, x0)) <= 0.0 {
        normal = normalized(&sub(z, x0));
    }
    let q = &cfg.quadrature;
    let radii = q.ladder.radii(r);
    let approach = q.ladder.approach(r);
    let prefactor = 2.0 / (n as f64 * omega(n) * r);

    let mut flags = Vec::new();
    let mut directions = Vec::new();
    for d in approach_fan(&normal, cfg) {
        let exterior = approach
            .iter()
            .all(|t| b.classify_point(&axpy(z, *t, &d), 0.0).ok() == Some(PointClass::Outside));
        if exterior {
            directions.push(d);
        } else {
            flags.push(format!(
                "approach direction {d:?} enters the domain; skipped"
            ));
        }
    }

    let (nd, nr, nt) = (directions.len(), radii.len(), approach.len());
    let cells: Vec<(usize, usize, usize)> = (0..nd)
        .flat_map(|d| (0..nr).flat_map(move |j| (0..nt).map(move |k| (d, j, k))))
        .collect();
    let results: Vec<QuadratureResult> = cells
        .par_iter()
        .map(|&(d, j, k)| {
            let alpha = axpy(z, approach[k], &directions[d]);
            cap_integral(b, z, radii[j], &alpha, x0, q).map(|res| res.scaled(prefactor))
        })
        .collect::<Result<_>>()?;
    let mut table = vec![vec![vec![0.0; nt]; nr]; nd];
    let mut cell_error = vec![vec![vec![0.0; nt]; nr]; nd];
    let mut table_error: f64 = 0.0;
    for (&(d, j, k), res) in cells.iter().zip(&results) {
        table[d][j][k] = res.value;
        cell_error[d][j][k] = res.error_estimate;
        table_error = table_error.max(res.error_estimate);
    }

    let mut inner_limits = Vec::with_capacity(nd);
    let mut outer_limits = Vec::with_capacity(nd);
    for (d, rows) in table.iter().enumerate() {
        // quadrature noise in the table, then extrapolation noise in the
        // inner limits, count as zero differences
        let inner_opts = ExtrapolationOptions {
            abs_noise: 2.0 * table_error,
            ..Default::default()
        };
        let inner: Vec<LimitEstimate> = rows
            .iter()
            .zip(&cell_error[d])
            .map(|(row, errs)| {
                let samples: Vec<(f64, f64)> =
                    approach.iter().copied().zip(row.iter().copied()).collect();
                extrapolate_limit_with_errors(&samples, errs, Model::Power, &inner_opts)
            })
            .collect::<Result<_>>()?;
        let outer_opts = ExtrapolationOptions {
            abs_noise: 2.0
                * inner
                    .iter()
                    .map(|e| e.error_estimate)
                    .fold(2.0 * table_error, f64::max),
            ..Default::default()
        };
        let outer_samples: Vec<(f64, f64)> = radii
            .iter()
            .copied()
            .zip(inner.iter().map(|e| e.value))
            .collect();
        let inner_errors: Vec<f64> = inner.iter().map(|e| e.error_estimate).collect();
        let outer = extrapolate_limit_with_errors(
            &outer_samples,
            &inner_errors,
            Model::Power,
            &outer_opts,
        )?;
        for (j, e) in inner.iter().enumerate() {
            if flagged(e.status) {
                flags.push(format!(
                    "direction {d}, R = {:e}: inner limit {:?}",
                    radii[j], e.status
                ));
            }
        }
        if flagged(outer.status) {
            flags.push(format!("direction {d}: outer limit {:?}", outer.status));
        }
        inner_limits.push(inner);
        outer_limits.push(outer);
    }
    let mut argmin = 0;
    for (d, o) in outer_limits.iter().enumerate() {
        if o.value < outer_limits[argmin].value {
            argmin = d;
        }
    }
    let outer = &outer_limits[argmin];
    let non_convergent =
        flagged(outer.status) || inner_limits[argmin].iter().any(|e| flagged(e.status));
    Ok(IndexEstimate {
        value: outer.value,
        z: z.to_vec(),
        r,
        normal,
        // inner and table errors are already propagated into the outer estimate
        error_estimate: outer.error_estimate,
        directions,
        radii,
        approach,
        table,
        table_error,
        inner_limits,
        outer_limits: outer_limits.clone(),
        argmin_direction: argmin,
        flags,
        non_convergent,
    })
}
