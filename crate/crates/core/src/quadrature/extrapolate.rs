//! Limits of one-parameter sequences `v(t)` as `t -> 0`.
//!
//! The asymptotic model is `v(t) = L + c t^p + ...`. The order `p` is
//! estimated from three consecutive samples, snapped to a half-integer when
//! close, and the limit is obtained by Neville extrapolation in `s = t^q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Power-law approach in t, order estimated from the data.
    Power,
    /// Geometric sequence in the sample index (Aitken Δ²).
    Geometric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStatus {
    Converged,
    /// The tail is constant to roundoff; the order is indeterminate.
    Exact,
    /// Consecutive differences change sign; value is the tail minimum.
    NonMonotoneTail,
    /// The error estimate exceeds the configured ceiling.
    NoConvergence,
}

impl LimitStatus {
    pub fn is_converged(self) -> bool {
        matches!(self, LimitStatus::Converged | LimitStatus::Exact)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub value: f64,
    pub samples: Vec<(f64, f64)>,
    pub order_estimate: Option<f64>,
    pub error_estimate: f64,
    pub status: LimitStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtrapolationOptions {
    /// Samples used from the small-t end.
    pub tail: usize,
    /// Differences below `max(noise · max(1, |v|), abs_noise)` count as zero.
    pub noise: f64,
    pub abs_noise: f64,
    /// Estimates with a larger error are flagged `NoConvergence`.
    pub max_error: f64,
}

impl Default for ExtrapolationOptions {
    fn default() -> Self {
        ExtrapolationOptions {
            tail: 5,
            noise: 1e-10,
            abs_noise: 0.0,
            max_error: f64::INFINITY,
        }
    }
}

pub fn extrapolate_limit(samples: &[(f64, f64)], model: Model) -> Result<LimitEstimate> {
    extrapolate_limit_with(samples, model, &ExtrapolationOptions::default())
}

pub fn extrapolate_limit_with(
    samples: &[(f64, f64)],
    model: Model,
    opts: &ExtrapolationOptions,
) -> Result<LimitEstimate> {
    if samples.len() < 4 {
        return Err(Error::InsufficientSamples {
            needed: 4,
            got: samples.len(),
        });
    }
    let ordered = samples
        .iter()
        .all(|s| s.0 > 0.0 && s.0.is_finite() && s.1.is_finite())
        && samples.windows(2).all(|w| w[1].0 < w[0].0);
    if !ordered {
        return Err(Error::UnorderedSamples);
    }
    let tail = &samples[samples.len() - opts.tail.clamp(4, samples.len())..];
    let mut est = LimitEstimate {
        value: tail[tail.len() - 1].1,
        samples: samples.to_vec(),
        order_estimate: None,
        error_estimate: 0.0,
        status: LimitStatus::Converged,
    };

    let vmax = tail.iter().fold(0.0f64, |m, s| m.max(s.1.abs()));
    let floor = (opts.noise * vmax.max(1.0)).max(opts.abs_noise);
    let diffs: Vec<f64> = tail.windows(2).map(|w| w[1].1 - w[0].1).collect();
    if diffs.iter().all(|d| *d == 0.0) {
        est.status = LimitStatus::Exact;
        return Ok(est);
    }
    if diffs.iter().all(|d| d.abs() <= floor) {
        est.error_estimate = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        return Ok(est);
    }
    let significant: Vec<f64> = diffs.iter().copied().filter(|d| d.abs() > floor).collect();
    if significant
        .windows(2)
        .any(|w| w[0].signum() != w[1].signum())
    {
        let lo = tail.iter().fold(f64::INFINITY, |m, s| m.min(s.1));
        let hi = tail.iter().fold(f64::NEG_INFINITY, |m, s| m.max(s.1));
        est.value = lo;
        est.error_estimate = hi - lo;
        est.status = LimitStatus::NonMonotoneTail;
        return Ok(est);
    }

    match model {
        Model::Power => power_limit(tail, &mut est),
        Model::Geometric => aitken(tail, &mut est),
    }
    if !(est.error_estimate <= opts.max_error) {
        est.status = LimitStatus::NoConvergence;
    }
    Ok(est)
}

/// Solves `(t1^p - t2^p)/(t2^p - t3^p) = (v1 - v2)/(v2 - v3)` for p.
fn order_from_triple(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<f64> {
    let rho = (a.1 - b.1) / (b.1 - c.1);
    if !(rho.is_finite() && rho > 0.0) {
        return None;
    }
    let g = |p: f64| (a.0.powf(p) - b.0.powf(p)) / (b.0.powf(p) - c.0.powf(p)) - rho;
    let (mut lo, mut hi) = (0.05, 8.0);
    let (glo, ghi) = (g(lo), g(hi));
    if glo.signum() == ghi.signum() {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn snap_half(p: f64) -> f64 {
    let r = (2.0 * p).round() / 2.0;
    if (p - r).abs() <= 0.15 {
        r
    } else {
        p
    }
}

/// Neville tableau at s = 0; returns the last two diagonal entries.
fn neville_at_zero(s: &[f64], v: &[f64]) -> (f64, f64) {
    let m = s.len();
    let mut p = v.to_vec();
    let mut prev_top = p[m - 1];
    for k in 1..m {
        for i in 0..m - k {
            p[i] = (s[i + k] * p[i] - s[i] * p[i + 1]) / (s[i + k] - s[i]);
        }
        if k == m - 2 {
            prev_top = p[1];
        }
    }
    (p[0], prev_top)
}

/// Neville runs in `s = t^q`: integer orders use q = 1, half-integers 0.5.
fn neville_exponent(p: f64) -> f64 {
    if p.fract() == 0.0 {
        1.0
    } else if (2.0 * p).fract() == 0.0 {
        0.5
    } else {
        p
    }
}

/// As [`extrapolate_limit_with`], with `errors[i]` the uncertainty of
/// `samples[i].1` propagated into the error estimate. Neville is linear
/// in the data, so sample errors contribute `Σ |w_i| e_i`.
pub fn extrapolate_limit_with_errors(
    samples: &[(f64, f64)],
    errors: &[f64],
    model: Model,
    opts: &ExtrapolationOptions,
) -> Result<LimitEstimate> {
    if errors.len() != samples.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            got: errors.len(),
        });
    }
    let mut est = extrapolate_limit_with(samples, model, opts)?;
    let k = opts.tail.clamp(4, samples.len());
    let tail = &samples[samples.len() - k..];
    let tail_err = &errors[errors.len() - k..];
    let max_err = tail_err.iter().fold(0.0f64, |m, e| m.max(*e));
    let propagated = match (model, est.status, est.order_estimate) {
        (Model::Power, LimitStatus::Converged | LimitStatus::NoConvergence, Some(p)) => {
            let q = neville_exponent(p);
            let s: Vec<f64> = tail.iter().map(|x| x.0.powf(q)).collect();
            (0..k)
                .map(|i| {
                    let mut unit = vec![0.0; k];
                    unit[i] = 1.0;
                    neville_at_zero(&s, &unit).0.abs() * tail_err[i]
                })
                .sum()
        }
        _ => max_err,
    };
    est.error_estimate += propagated;
    if !(est.error_estimate <= opts.max_error) {
        est.status = LimitStatus::NoConvergence;
    }
    Ok(est)
}

fn power_limit(tail: &[(f64, f64)], est: &mut LimitEstimate) {
    let m = tail.len();
    let Some(p) = order_from_triple(tail[m - 3], tail[m - 2], tail[m - 1]) else {
        let d = tail[m - 1].1 - tail[m - 2].1;
        est.error_estimate = d.abs();
        est.status = LimitStatus::NoConvergence;
        return;
    };
    let pr = snap_half(p);
    est.order_estimate = Some(pr);
    let q = neville_exponent(pr);
    let s: Vec<f64> = tail.iter().map(|x| x.0.powf(q)).collect();
    let v: Vec<f64> = tail.iter().map(|x| x.1).collect();
    let (value, prev) = neville_at_zero(&s, &v);
    est.value = value;
    est.error_estimate = (value - prev).abs();
}

fn aitken(tail: &[(f64, f64)], est: &mut LimitEstimate) {
    let m = tail.len();
    let acc = |i: usize| {
        let (a, b, c) = (tail[i].1, tail[i + 1].1, tail[i + 2].1);
        let den = c - 2.0 * b + a;
        if den == 0.0 {
            c
        } else {
            c - (c - b) * (c - b) / den
        }
    };
    let last = acc(m - 3);
    let prev = acc(m - 4);
    let r = (tail[m - 1].1 - tail[m - 2].1) / (tail[m - 2].1 - tail[m - 3].1);
    est.order_estimate = r.is_finite().then_some(r);
    est.value = last;
    est.error_estimate = (last - prev).abs();
}
