//! The Kuran function `k_α(x) = 1 + |α|^{n-2}(|x|² - |α|²)/|x - α|^n`,
//! harmonic off `α` and zero at the origin, and boundary means of it.

mod gap;

pub use gap::{kuran_gap, GapEstimate, GridScan, LevelBest, SearchConfig, TracePoint};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Boundary, PointClass};
use crate::point::{dist, norm, norm2, sub};
use crate::quadrature::{graded_refine, integrate_boundary, QuadConfig, QuadratureResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KuranEval {
    pub alpha: Vec<f64>,
    pub at: Vec<f64>,
    pub h: f64,
    pub k: f64,
}

fn check_args(alpha: &[f64], x: &[f64]) -> Result<()> {
    if alpha.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.len(),
            got: x.len(),
        });
    }
    if alpha.len() < 2 {
        return Err(Error::InvalidPoint("dimension must be at least 2".into()));
    }
    if !alpha.iter().chain(x).all(|v| v.is_finite()) {
        return Err(Error::InvalidPoint("non-finite coordinate".into()));
    }
    if norm(alpha) == 0.0 {
        return Err(Error::InvalidPoint("alpha must be non-zero".into()));
    }
    let d = dist(alpha, x);
    if d <= 4.0 * f64::EPSILON * norm(alpha).max(norm(x)) {
        return Err(Error::SingularPoint(d));
    }
    Ok(())
}

/// `h_α(x)` with no argument checks; infinite at `x = α`.
#[inline]
pub(crate) fn h_raw(alpha: &[f64], alpha_pow: f64, alpha2: f64, x: &[f64]) -> f64 {
    let n = alpha.len() as i32;
    let mut x2 = 0.0;
    let mut d2 = 0.0;
    for (a, xi) in alpha.iter().zip(x) {
        x2 += xi * xi;
        d2 += (xi - a) * (xi - a);
    }
    let d = d2.sqrt();
    alpha_pow * (x2 - alpha2) / (d.powi(n - 2) * d2)
}

pub fn kuran_h(alpha: &[f64], x: &[f64]) -> Result<f64> {
    check_args(alpha, x)?;
    let a2 = norm2(alpha);
    Ok(h_raw(alpha, a2.sqrt().powi(alpha.len() as i32 - 2), a2, x))
}

pub fn kuran_k(alpha: &[f64], x: &[f64]) -> Result<f64> {
    kuran_h(alpha, x).map(|h| 1.0 + h)
}

pub fn kuran_eval(alpha: &[f64], x: &[f64]) -> Result<KuranEval> {
    let h = kuran_h(alpha, x)?;
    Ok(KuranEval {
        alpha: alpha.to_vec(),
        at: x.to_vec(),
        h,
        k: 1.0 + h,
    })
}

/// `⨍_{∂Ω - x0} k_α dσ` for `α` given relative to `x0`. The boundary is
/// graded towards `x0 + α` and the mean uses the measure of the graded
/// boundary, so discrete refinement does not bias it.
pub fn boundary_mean_kuran(
    b: &Boundary,
    x0: &[f64],
    alpha: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadratureResult> {
    if !b.is_closed() {
        return Err(Error::NotClosed);
    }
    check_args(alpha, x0)?;
    if alpha.len() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            got: alpha.len(),
        });
    }
    let global: Vec<f64> = x0.iter().zip(alpha).map(|(a, b)| a + b).collect();
    let tol = 1e-12 * b.length_scale();
    if b.classify_point(&global, tol)? != PointClass::Outside {
        return Err(Error::AlphaNotExterior(global));
    }
    mean_unchecked(b, x0, alpha, &global, cfg)
}

pub(crate) fn mean_unchecked(
    b: &Boundary,
    x0: &[f64],
    alpha: &[f64],
    global: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadratureResult> {
    let graded = graded_refine(b, global, cfg)?;
    let a2 = norm2(alpha);
    let ap = a2.sqrt().powi(alpha.len() as i32 - 2);
    let n = x0.len();
    let f = |x: &[f64]| {
        if n <= 8 {
            let mut y = [0.0; 8];
            for i in 0..n {
                y[i] = x[i] - x0[i];
            }
            1.0 + h_raw(alpha, ap, a2, &y[..n])
        } else {
            1.0 + h_raw(alpha, ap, a2, &sub(x, x0))
        }
    };
    let r = integrate_boundary(&graded, f, None, cfg)?;
    Ok(r.scaled(1.0 / graded.surface_measure()))
}
