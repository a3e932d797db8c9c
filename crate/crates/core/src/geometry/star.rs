//! Smooth star-shaped boundaries `x = c + ρ(u) u`, u on the unit sphere.
//!
//! Used for ellipses, spheroids/ellipsoids and harmonic perturbations of
//! circles and spheres. Only n = 2 and n = 3 are supported.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::point::{axpy, dist2, dot, mat_t_vec, mat_vec, norm, norm2, normalized, reject, Point};
use crate::quadrature::rules::{legendre_with_derivative, pairwise_sum, UnitRule};

/// Radial profile in the shape's local frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum RadialFn {
    /// Axis-aligned ellipse/ellipsoid with the given semi-axes.
    Ellipsoid { semi_axes: Vec<f64> },
    /// `base (1 + amp cos(k θ + phase))`, n = 2.
    Harmonic {
        base: f64,
        amp: f64,
        k: u32,
        phase: f64,
    },
    /// `base (1 + amp P_l(u_z))`, n = 3.
    Zonal { base: f64, amp: f64, degree: u32 },
    /// `base (1 + amp (u_x^4 + u_y^4 + u_z^4 - 3/5))`, n = 3.
    Cubic { base: f64, amp: f64 },
}

impl RadialFn {
    fn dim(&self) -> Option<usize> {
        match self {
            RadialFn::Ellipsoid { semi_axes } => Some(semi_axes.len()),
            RadialFn::Harmonic { .. } => Some(2),
            RadialFn::Zonal { .. } | RadialFn::Cubic { .. } => Some(3),
        }
    }

    /// Value and Euclidean gradient of an extension, at a unit vector.
    fn eval(&self, u: &[f64]) -> (f64, Vec<f64>) {
        match self {
            RadialFn::Ellipsoid { semi_axes } => {
                let q: f64 = u.iter().zip(semi_axes).map(|(x, a)| x * x / (a * a)).sum();
                let rho = q.powf(-0.5);
                let f = -q.powf(-1.5);
                let grad = u
                    .iter()
                    .zip(semi_axes)
                    .map(|(x, a)| f * x / (a * a))
                    .collect();
                (rho, grad)
            }
            RadialFn::Harmonic {
                base,
                amp,
                k,
                phase,
            } => {
                let theta = u[1].atan2(u[0]);
                let kf = *k as f64;
                let arg = kf * theta + phase;
                let rho = base * (1.0 + amp * arg.cos());
                let drho = -base * amp * kf * arg.sin();
                // dθ direction on the circle is (-u_y, u_x)
                (rho, vec![-drho * u[1], drho * u[0]])
            }
            RadialFn::Zonal { base, amp, degree } => {
                let (p, dp) = legendre_with_derivative(*degree as usize, u[2]);
                (base * (1.0 + amp * p), vec![0.0, 0.0, base * amp * dp])
            }
            RadialFn::Cubic { base, amp } => {
                let s: f64 = u.iter().map(|x| x.powi(4)).sum();
                let rho = base * (1.0 + amp * (s - 0.6));
                (
                    rho,
                    u.iter().map(|x| base * amp * 4.0 * x.powi(3)).collect(),
                )
            }
        }
    }
}

/// A closed star-shaped boundary with a rigid frame and a scale factor.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StarShaped {
    pub center: Point,
    /// Row-major rotation taking local coordinates to global ones.
    pub frame: Vec<Vec<f64>>,
    pub scale: f64,
    pub radial: RadialFn,
    #[serde(skip)]
    samples: OnceLock<Vec<(Vec<f64>, Vec<f64>)>>,
}

impl PartialEq for StarShaped {
    fn eq(&self, other: &Self) -> bool {
        self.center == other.center
            && self.frame == other.frame
            && self.scale == other.scale
            && self.radial == other.radial
    }
}

impl StarShaped {
    pub fn new(center: Point, frame: Vec<Vec<f64>>, scale: f64, radial: RadialFn) -> Result<Self> {
        let n = center.dim();
        if n != 2 && n != 3 {
            return Err(Error::Unsupported(format!(
                "smooth star-shaped boundaries need n = 2 or 3, got {n}"
            )));
        }
        if radial.dim() != Some(n) {
            return Err(Error::InvalidShape(
                "radial profile does not match dimension".into(),
            ));
        }
        if frame.len() != n || frame.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidShape("frame must be an n x n matrix".into()));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidShape("scale must be positive".into()));
        }
        match &radial {
            RadialFn::Ellipsoid { semi_axes } => {
                if semi_axes.iter().any(|a| !(*a > 0.0)) {
                    return Err(Error::InvalidShape("semi-axes must be positive".into()));
                }
            }
            RadialFn::Harmonic { base, amp, .. }
            | RadialFn::Zonal { base, amp, .. }
            | RadialFn::Cubic { base, amp } => {
                if !(*base > 0.0) {
                    return Err(Error::InvalidShape("radius must be positive".into()));
                }
                if amp.abs() >= 0.5 {
                    return Err(Error::InvalidShape(
                        "perturbation amplitude must be below 0.5".into(),
                    ));
                }
            }
        }
        let s = StarShaped {
            center,
            frame,
            scale,
            radial,
            samples: OnceLock::new(),
        };
        // radial function must stay positive
        if s.sample_dirs().iter().any(|(u, _)| !(s.rho(u) > 0.0)) {
            return Err(Error::InvalidShape(
                "radial function must be positive".into(),
            ));
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// ρ(u) for a global unit vector u.
    pub fn rho(&self, u: &[f64]) -> f64 {
        let local = mat_t_vec(&self.frame, u);
        self.scale * self.radial.eval(&local).0
    }

    /// ρ(u) and its tangential gradient on the sphere.
    pub fn rho_and_grad(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let local = mat_t_vec(&self.frame, u);
        let (r, g) = self.radial.eval(&local);
        let g = mat_vec(&self.frame, &g);
        let g: Vec<f64> = reject(&g, u).iter().map(|x| x * self.scale).collect();
        (self.scale * r, g)
    }

    pub fn point(&self, u: &[f64]) -> Vec<f64> {
        axpy(&self.center, self.rho(u), u)
    }

    /// Point, outward unit normal and area factor `ρ^{n-2} sqrt(ρ² + |∇ρ|²)`.
    pub fn frame_at(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let n = self.dim();
        let (rho, g) = self.rho_and_grad(u);
        let x = axpy(&self.center, rho, u);
        let normal = normalized(&axpy(
            &u.iter().map(|c| c * rho).collect::<Vec<_>>(),
            -1.0,
            &g,
        ));
        let jac = rho.powi(n as i32 - 2) * (rho * rho + norm2(&g)).sqrt();
        (x, normal, jac)
    }

    pub fn direction_of(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d: Vec<f64> = x
            .iter()
            .zip(self.center.iter())
            .map(|(a, b)| a - b)
            .collect();
        let l = norm(&d);
        (l > 0.0).then(|| d.iter().map(|c| c / l).collect())
    }

    /// Signed radial excess `|x - c| - ρ(u_x)`; negative inside.
    pub fn radial_excess(&self, x: &[f64]) -> f64 {
        match self.direction_of(x) {
            Some(u) => dist2(x, &self.center).sqrt() - self.rho(&u),
            None => -self.rho(&Point::unit(self.dim(), 0)),
        }
    }

    /// Integral of `g(u, ρ, jac)` over the unit sphere: trapezoid in 2-D,
    /// Gauss in cos θ times trapezoid in φ in 3-D.
    fn sphere_integral<G: Fn(&[f64]) -> f64>(&self, g: G) -> f64 {
        let mut vals = Vec::new();
        if self.dim() == 2 {
            let m = 4096;
            for i in 0..m {
                let th = 2.0 * PI * i as f64 / m as f64;
                vals.push(g(&[th.cos(), th.sin()]) * 2.0 * PI / m as f64);
            }
        } else {
            let rule = UnitRule::gauss(96);
            let m = 256;
            for (z01, w) in rule.nodes.iter().zip(&rule.weights) {
                let z = 2.0 * z01 - 1.0;
                let s = (1.0 - z * z).sqrt();
                for j in 0..m {
                    let ph = 2.0 * PI * j as f64 / m as f64;
                    vals.push(g(&[s * ph.cos(), s * ph.sin(), z]) * 2.0 * w * 2.0 * PI / m as f64);
                }
            }
        }
        pairwise_sum(&vals)
    }

    pub fn measure(&self) -> f64 {
        self.sphere_integral(|u| self.frame_at(u).2)
    }

    pub fn volume(&self) -> f64 {
        let n = self.dim() as i32;
        self.sphere_integral(|u| self.rho(u).powi(n)) / n as f64
    }

    /// Cached direction samples with their boundary points.
    pub fn sample_dirs(&self) -> &[(Vec<f64>, Vec<f64>)] {
        self.samples.get_or_init(|| {
            let dirs = if self.dim() == 2 {
                (0..2048)
                    .map(|i| {
                        let th = 2.0 * PI * i as f64 / 2048.0;
                        vec![th.cos(), th.sin()]
                    })
                    .collect()
            } else {
                fibonacci_sphere(8192)
            };
            dirs.into_iter()
                .map(|u| {
                    let x = axpy(
                        &self.center,
                        self.scale * self.radial.eval(&mat_t_vec(&self.frame, &u)).0,
                        &u,
                    );
                    (u, x)
                })
                .collect()
        })
    }

    /// Local minimiser of `|x(u) - p|²` starting from the unit vector `u0`.
    pub fn refine_closest(&self, p: &[f64], u0: &[f64]) -> (Vec<f64>, f64) {
        let f = |u: &[f64]| dist2(&self.point(u), p);
        if self.dim() == 2 {
            let th0 = u0[1].atan2(u0[0]);
            let at = |th: f64| [th.cos(), th.sin()];
            // derivative of ½|x-p|² along θ
            let dfun = |th: f64| {
                let u = at(th);
                let (rho, g) = self.rho_and_grad(&u);
                let t = [-u[1], u[0]];
                let drho = dot(&g, &t);
                let x = axpy(&self.center, rho, &u);
                let xp = [drho * u[0] + rho * t[0], drho * u[1] + rho * t[1]];
                (x[0] - p[0]) * xp[0] + (x[1] - p[1]) * xp[1]
            };
            let h = 2.0 * PI / 1024.0;
            // bracket by golden section first, then polish the stationarity condition
            let (mut a, mut b) = (th0 - h, th0 + h);
            let gr = 0.5 * (5f64.sqrt() - 1.0);
            let mut c = b - gr * (b - a);
            let mut d = a + gr * (b - a);
            let (mut fc, mut fd) = (f(&at(c)), f(&at(d)));
            for _ in 0..60 {
                if fc < fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - gr * (b - a);
                    fc = f(&at(c));
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + gr * (b - a);
                    fd = f(&at(d));
                }
            }
            let mut th = 0.5 * (a + b);
            let (mut lo, mut hi) = (th - 1e-5, th + 1e-5);
            if dfun(lo) < 0.0 && dfun(hi) > 0.0 {
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if dfun(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                th = 0.5 * (lo + hi);
            }
            let u = at(th).to_vec();
            let d2 = f(&u);
            return (u, d2);
        }
        // n = 3: Nelder-Mead in tangent coordinates around u0
        let e1 = crate::point::orthogonal_unit(u0, None);
        let e2 = crate::point::cross3(u0, &e1).to_vec();
        let make = |ab: &[f64; 2], base: &[f64], b1: &[f64], b2: &[f64]| -> Vec<f64> {
            normalized(&[
                base[0] + ab[0] * b1[0] + ab[1] * b2[0],
                base[1] + ab[0] * b1[1] + ab[1] * b2[1],
                base[2] + ab[0] * b1[2] + ab[1] * b2[2],
            ])
        };
        let mut base = u0.to_vec();
        let (mut b1, mut b2) = (e1, e2);
        let mut step = 2e-3;
        for _round in 0..3 {
            let obj = |ab: &[f64; 2]| f(&make(ab, &base, &b1, &b2));
            let best = nelder_mead_2d(&obj, step, 400);
            base = make(&best, &base, &b1, &b2);
            b1 = crate::point::orthogonal_unit(&base, None);
            b2 = crate::point::cross3(&base, &b1).to_vec();
            step *= 1e-2;
        }
        let d2 = f(&base);
        (base, d2)
    }

    /// Nearest boundary point to `p`: global scan over cached samples and a
    /// local refinement of the best one.
    pub fn closest(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let samples = self.sample_dirs();
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (i, (_, x)) in samples.iter().enumerate() {
            let d = dist2(x, p);
            if d < bd {
                bd = d;
                best = i;
            }
        }
        let (u, d2) = self.refine_closest(p, &samples[best].0);
        (self.point(&u), u, d2.sqrt())
    }
}

/// Roughly uniform points on S², golden-angle spiral.
pub fn fibonacci_sphere(m: usize) -> Vec<Vec<f64>> {
    let ga = PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
            let s = (1.0 - z * z).sqrt();
            let ph = ga * i as f64;
            vec![s * ph.cos(), s * ph.sin(), z]
        })
        .collect()
}

/// Minimal Nelder-Mead on R² starting at the origin.
pub(crate) fn nelder_mead_2d<F: Fn(&[f64; 2]) -> f64>(f: &F, step: f64, iters: usize) -> [f64; 2] {
    let mut simplex = [[0.0, 0.0], [step, 0.0], [0.0, step]];
    let mut vals = simplex.map(|p| f(&p));
    for _ in 0..iters {
        let mut idx = [0, 1, 2];
        idx.sort_by(|a, b| vals[*a].total_cmp(&vals[*b]));
        simplex = idx.map(|i| simplex[i]);
        vals = idx.map(|i| vals[i]);
        let size = ((simplex[1][0] - simplex[0][0]).abs() + (simplex[1][1] - simplex[0][1]).abs())
            .max((simplex[2][0] - simplex[0][0]).abs() + (simplex[2][1] - simplex[0][1]).abs());
        if size < 1e-15 {
            break;
        }
        let c = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let at = |t: f64| {
            [
                c[0] + t * (simplex[2][0] - c[0]),
                c[1] + t * (simplex[2][1] - c[1]),
            ]
        };
        let xr = at(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = at(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let xc = if fr < vals[2] { at(-0.5) } else { at(0.5) };
            let fc = f(&xc);
            if fc < vals[2].min(fr) {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        0.5 * (simplex[0][0] + simplex[i][0]),
                        0.5 * (simplex[0][1] + simplex[i][1]),
                    ];
                    vals[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..3)
        .min_by(|a, b| vals[*a].total_cmp(&vals[*b]))
        .unwrap_or(0);
    simplex[best]
}
