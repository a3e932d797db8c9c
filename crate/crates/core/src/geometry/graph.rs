//! Lipschitz graph patches: `Ω ∩ U = {(y, s) : |y| < R0, a < s < ψ(y)}` in a
//! local frame, with `ψ(y) = height + g(y)`, `g(0) = 0`, `∇g(0) = 0`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::point::{dot, mat_t_vec, mat_vec, norm, norm2, sub, Point};
use crate::quadrature::constants::sigma;
use crate::quadrature::rules::{adaptive_gk, pairwise_sum, UnitRule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum GraphProfile {
    /// `-c |y|² / 2`; c > 0 bends the boundary towards the domain.
    Paraboloid { curvature: f64 },
    /// `-amp (1 - exp(-|y|²/w²))`.
    Gaussian { amp: f64, width: f64 },
    /// `-c |y|⁴`, flat to second order at the apex.
    Quartic { c: f64 },
    /// `-½ Σ κ_i y_i²`.
    Quadratic { curvatures: Vec<f64> },
}

impl GraphProfile {
    pub fn is_radial(&self) -> bool {
        !matches!(self, GraphProfile::Quadratic { .. })
    }

    fn eval(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let q = norm2(y);
        match self {
            GraphProfile::Paraboloid { curvature } => (
                -0.5 * curvature * q,
                y.iter().map(|v| -curvature * v).collect(),
            ),
            GraphProfile::Gaussian { amp, width } => {
                let e = (-q / (width * width)).exp();
                let f = -2.0 * amp / (width * width) * e;
                (-amp * (1.0 - e), y.iter().map(|v| f * v).collect())
            }
            GraphProfile::Quartic { c } => {
                (-c * q * q, y.iter().map(|v| -4.0 * c * q * v).collect())
            }
            GraphProfile::Quadratic { curvatures } => (
                -0.5 * y
                    .iter()
                    .zip(curvatures)
                    .map(|(v, k)| k * v * v)
                    .sum::<f64>(),
                y.iter().zip(curvatures).map(|(v, k)| -k * v).collect(),
            ),
        }
    }

    fn hessian(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let m = y.len();
        let q = norm2(y);
        let mut h = vec![vec![0.0; m]; m];
        match self {
            GraphProfile::Paraboloid { curvature } => {
                for (i, row) in h.iter_mut().enumerate() {
                    row[i] = -curvature;
                }
            }
            GraphProfile::Gaussian { amp, width } => {
                let w2 = width * width;
                let e = (-q / w2).exp();
                let f = -2.0 * amp / w2 * e;
                for i in 0..m {
                    for j in 0..m {
                        h[i][j] = f * ((i == j) as u8 as f64 - 2.0 * y[i] * y[j] / w2);
                    }
                }
            }
            GraphProfile::Quartic { c } => {
                for i in 0..m {
                    for j in 0..m {
                        h[i][j] = -4.0 * c * (q * (i == j) as u8 as f64 + 2.0 * y[i] * y[j]);
                    }
                }
            }
            GraphProfile::Quadratic { curvatures } => {
                for (i, row) in h.iter_mut().enumerate() {
                    row[i] = -curvatures[i];
                }
            }
        }
        h
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphPatch {
    pub origin: Point,
    /// Row-major rotation; local axis n-1 is the graph direction.
    pub frame: Vec<Vec<f64>>,
    pub height: f64,
    pub profile: GraphProfile,
    pub patch_radius: f64,
    pub window: (f64, f64),
    pub lipschitz: f64,
}

impl GraphPatch {
    pub fn new(
        origin: Point,
        frame: Vec<Vec<f64>>,
        height: f64,
        profile: GraphProfile,
        patch_radius: f64,
        window: (f64, f64),
    ) -> Result<Self> {
        let n = origin.dim();
        if frame.len() != n || frame.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidShape("frame must be an n x n matrix".into()));
        }
        if !(patch_radius > 0.0) {
            return Err(Error::InvalidShape("patch radius must be positive".into()));
        }
        if n > 3 && !profile.is_radial() {
            return Err(Error::Unsupported(
                "graph patches with n > 3 need a radial profile".into(),
            ));
        }
        if let GraphProfile::Quadratic { curvatures } = &profile {
            if curvatures.len() != n - 1 {
                return Err(Error::DimensionMismatch {
                    expected: n - 1,
                    got: curvatures.len(),
                });
            }
        }
        let mut g = GraphPatch {
            origin,
            frame,
            height,
            profile,
            patch_radius,
            window,
            lipschitz: 0.0,
        };
        let samples = g.grid_samples();
        let mut lip: f64 = 0.0;
        for y in &samples {
            let (psi, grad) = g.psi(y);
            if !(psi > window.0 && psi < window.1) {
                return Err(Error::InvalidShape(format!(
                    "graph leaves the window ({}, {}) at y = {y:?}",
                    window.0, window.1
                )));
            }
            lip = lip.max(norm(&grad));
        }
        g.lipschitz = lip * 1.01 + 1e-12;
        // sampled-pair check of the Lipschitz bound
        let step = (samples.len() / 97).max(1);
        for (i, a) in samples.iter().enumerate().step_by(step) {
            for b in samples.iter().skip(i % 13).step_by(step * 3 + 1) {
                let d = crate::point::dist(a, b);
                if (g.psi(a).0 - g.psi(b).0).abs() > g.lipschitz * d + 1e-12 {
                    return Err(Error::InvalidShape(
                        "sampled Lipschitz bound violated".into(),
                    ));
                }
            }
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.origin.dim()
    }

    fn grid_samples(&self) -> Vec<Vec<f64>> {
        let m = self.dim() - 1;
        let r0 = self.patch_radius;
        match m {
            1 => (0..=2000)
                .map(|i| vec![r0 * (2.0 * i as f64 / 2000.0 - 1.0)])
                .collect(),
            2 => {
                let mut v = vec![vec![0.0, 0.0]];
                for i in 1..=160 {
                    let rho = r0 * i as f64 / 160.0;
                    for j in 0..96 {
                        let th = 2.0 * PI * j as f64 / 96.0;
                        v.push(vec![rho * th.cos(), rho * th.sin()]);
                    }
                }
                v
            }
            _ => (0..=2000)
                .map(|i| {
                    let mut y = vec![0.0; m];
                    y[0] = r0 * i as f64 / 2000.0;
                    y
                })
                .collect(),
        }
    }

    /// ψ(y) and ∇ψ(y).
    pub fn psi(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let (g, grad) = self.profile.eval(y);
        (self.height + g, grad)
    }

    pub fn to_global(&self, y: &[f64], s: f64) -> Vec<f64> {
        let mut local = y.to_vec();
        local.push(s);
        mat_vec(&self.frame, &local)
            .iter()
            .zip(self.origin.iter())
            .map(|(a, b)| a + b)
            .collect()
    }

    /// Local coordinates `(y, s)` of a global point.
    pub fn to_local(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let mut l = mat_t_vec(&self.frame, &sub(x, &self.origin));
        let s = l.pop().unwrap_or(0.0);
        (l, s)
    }

    /// Graph point, outward unit normal, area factor.
    pub fn frame_at(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let (psi, grad) = self.psi(y);
        let a = (1.0 + norm2(&grad)).sqrt();
        let mut nl: Vec<f64> = grad.iter().map(|g| -g / a).collect();
        nl.push(1.0 / a);
        (self.to_global(y, psi), mat_vec(&self.frame, &nl), a)
    }

    pub fn measure(&self) -> f64 {
        let r0 = self.patch_radius;
        let m = self.dim() - 1;
        match m {
            1 => adaptive_gk(|y| self.frame_at(&[y]).2, -r0, r0, 1e-14, 1e-13).value,
            2 => {
                let rule = UnitRule::gauss(64);
                let nt = 256;
                let mut vals = Vec::with_capacity(64 * nt);
                for (u, w) in rule.nodes.iter().zip(&rule.weights) {
                    let rho = r0 * u;
                    for j in 0..nt {
                        let th = 2.0 * PI * j as f64 / nt as f64;
                        let a = self.frame_at(&[rho * th.cos(), rho * th.sin()]).2;
                        vals.push(a * rho * r0 * w * 2.0 * PI / nt as f64);
                    }
                }
                pairwise_sum(&vals)
            }
            _ => {
                let f = |rho: f64| {
                    let mut y = vec![0.0; m];
                    y[0] = rho;
                    rho.powi(m as i32 - 1) * self.frame_at(&y).2
                };
                sigma(m) * adaptive_gk(f, 0.0, r0, 1e-14, 1e-13).value
            }
        }
    }

    /// Strictly inside the patch cylinder and below the graph.
    pub fn inside_depth(&self, x: &[f64]) -> f64 {
        let (y, s) = self.to_local(x);
        if norm(&y) > self.patch_radius || s <= self.window.0 {
            return f64::NEG_INFINITY;
        }
        self.psi(&y).0 - s
    }

    /// Nearest graph point by damped Newton on `|y - y_p|² + (ψ(y) - s_p)²`.
    pub fn closest(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let (yp, sp) = self.to_local(p);
        let m = yp.len();
        let obj = |y: &[f64]| {
            let (psi, _) = self.psi(y);
            dot(&sub(y, &yp), &sub(y, &yp)) + (psi - sp) * (psi - sp)
        };
        let clamp = |y: Vec<f64>| {
            let l = norm(&y);
            if l > self.patch_radius {
                y.iter().map(|v| v * self.patch_radius / l).collect()
            } else {
                y
            }
        };
        let mut y = clamp(yp.clone());
        let mut fy = obj(&y);
        for _ in 0..100 {
            let (psi, grad) = self.psi(&y);
            let hpsi = self.profile.hessian(&y);
            let resid = psi - sp;
            let g: Vec<f64> = (0..m).map(|i| (y[i] - yp[i]) + resid * grad[i]).collect();
            let h: Vec<Vec<f64>> = (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| (i == j) as u8 as f64 + grad[i] * grad[j] + resid * hpsi[i][j])
                        .collect()
                })
                .collect();
            let step = solve_or_gradient(h, &g);
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..40 {
                let cand = clamp(y.iter().zip(&step).map(|(a, b)| a - lambda * b).collect());
                let fc = obj(&cand);
                if fc <= fy {
                    improved = fc < fy;
                    y = cand;
                    fy = fc;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved || norm(&step) * lambda < 1e-15 * (1.0 + norm(&y)) {
                break;
            }
        }
        let (x, _, _) = self.frame_at(&y);
        let d = crate::point::dist(&x, p);
        (x, y, d)
    }
}

/// Solves `h x = g`; falls back to `g` when `h` is not positive definite.
fn solve_or_gradient(mut h: Vec<Vec<f64>>, g: &[f64]) -> Vec<f64> {
    let m = g.len();
    let mut b = g.to_vec();
    for k in 0..m {
        let piv = h[k][k];
        if !(piv > 1e-12) {
            return g.to_vec();
        }
        for i in (k + 1)..m {
            let f = h[i][k] / piv;
            for j in k..m {
                h[i][j] -= f * h[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; m];
    for k in (0..m).rev() {
        let s: f64 = ((k + 1)..m).map(|j| h[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / h[k][k];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::identity_matrix;
    use approx::assert_relative_eq;

    fn bump2() -> GraphPatch {
        GraphPatch::new(
            Point::zeros(2),
            identity_matrix(2),
            1.0,
            GraphProfile::Paraboloid { curvature: 0.5 },
            0.5,
            (-1.0, 2.0),
        )
        .unwrap()
    }

    #[test]
    fn parabola_arc_length() {
        // arc length of y = -x²/4 on [-1/2, 1/2]: closed form via asinh
        let g = bump2();
        let c = 0.5f64;
        let half = |x: f64| 0.5 * (x * (1.0 + c * c * x * x).sqrt() + (c * x).asinh() / c);
        assert_relative_eq!(g.measure(), 2.0 * half(0.5), max_relative = 1e-12);
        assert_relative_eq!(g.lipschitz, 0.25 * 1.01 + 1e-12, max_relative = 1e-3);
    }

    #[test]
    fn closest_point_apex() {
        let g = bump2();
        let (x, _, d) = g.closest(&[0.0, 0.0]);
        assert_relative_eq!(d, 1.0, max_relative = 1e-14);
        assert!(x[0].abs() < 1e-12);
    }

    #[test]
    fn window_is_enforced() {
        let r = GraphPatch::new(
            Point::zeros(2),
            identity_matrix(2),
            1.0,
            GraphProfile::Paraboloid { curvature: 100.0 },
            0.5,
            (-1.0, 2.0),
        );
        assert!(r.is_err());
    }
}
