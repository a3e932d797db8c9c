//! Balls and truncated halfspace caps in any dimension n >= 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{axpy, dist, dot, norm, normalized, sub, Point};
use crate::quadrature::constants::{omega, sigma};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidShape(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn measure(&self) -> f64 {
        sigma(self.dim()) * self.radius.powi(self.dim() as i32 - 1)
    }

    pub fn volume(&self) -> f64 {
        omega(self.dim()) * self.radius.powi(self.dim() as i32)
    }

    /// Nearest boundary point; the centre maps to the first axis direction.
    pub fn closest(&self, p: &[f64]) -> Vec<f64> {
        let d = sub(p, &self.center);
        let l = norm(&d);
        if l == 0.0 {
            return axpy(&self.center, self.radius, &Point::unit(self.dim(), 0));
        }
        axpy(&self.center, self.radius / l, &d)
    }

    pub fn normal(&self, x: &[f64]) -> Vec<f64> {
        normalized(&sub(x, &self.center))
    }

    pub fn signed_distance(&self, p: &[f64]) -> f64 {
        dist(p, &self.center) - self.radius
    }
}

/// The flat disc `{<x, ν> = offset, |x - c| <= R_b}` standing in for a
/// halfspace boundary; the domain side is `<x, ν> < offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceCap {
    /// Outward unit normal.
    pub normal: Vec<f64>,
    pub offset: f64,
    /// Centre of the truncation disc, on the plane.
    pub disc_center: Vec<f64>,
    pub disc_radius: f64,
}

impl HalfspaceCap {
    pub fn new(
        normal: Vec<f64>,
        offset: f64,
        disc_center: Option<Vec<f64>>,
        disc_radius: f64,
    ) -> Result<Self> {
        let n = normal.len();
        if n < 2 || norm(&normal) == 0.0 || normal.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidShape(
                "halfspace normal must be a finite non-zero vector".into(),
            ));
        }
        if !(disc_radius > 0.0 && disc_radius.is_finite()) {
            return Err(Error::InvalidShape(
                "bounding radius must be positive".into(),
            ));
        }
        let normal = normalized(&normal);
        let c = disc_center.unwrap_or_else(|| normal.iter().map(|v| v * offset).collect());
        if c.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.len(),
            });
        }
        // snap the disc centre onto the plane
        let c = axpy(&c, offset - dot(&c, &normal), &normal);
        Ok(HalfspaceCap {
            normal,
            offset,
            disc_center: c,
            disc_radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn measure(&self) -> f64 {
        omega(self.dim() - 1) * self.disc_radius.powi(self.dim() as i32 - 1)
    }

    pub fn signed_distance(&self, p: &[f64]) -> f64 {
        dot(p, &self.normal) - self.offset
    }

    pub fn closest(&self, p: &[f64]) -> Vec<f64> {
        let foot = axpy(p, -self.signed_distance(p), &self.normal);
        let d = sub(&foot, &self.disc_center);
        let l = norm(&d);
        if l <= self.disc_radius {
            foot
        } else {
            axpy(&self.disc_center, self.disc_radius / l, &d)
        }
    }

    /// Largest s with `|p + s v - c| <= R_b` for an in-plane unit v.
    pub fn ray_extent(&self, p: &[f64], v: &[f64]) -> f64 {
        let w = sub(p, &self.disc_center);
        let b = dot(&w, v);
        let c = dot(&w, &w) - self.disc_radius * self.disc_radius;
        let disc = (b * b - c).max(0.0);
        (-b + disc.sqrt()).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn ball_measures() {
        let b = Ball::new(Point::zeros(3), 1.0).unwrap();
        assert_relative_eq!(b.measure(), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(b.volume(), 4.0 * PI / 3.0, max_relative = 1e-15);
        assert!(Ball::new(Point::zeros(2), 0.0).is_err());
    }

    #[test]
    fn halfspace_ray_extent_reaches_rim() {
        let h = HalfspaceCap::new(vec![0.0, 0.0, 1.0], 0.0, None, 10.0).unwrap();
        let p = [3.0, 0.0, 0.0];
        let s = h.ray_extent(&p, &[1.0, 0.0, 0.0]);
        assert_relative_eq!(s, 7.0, max_relative = 1e-14);
        assert_relative_eq!(
            h.ray_extent(&p, &[-1.0, 0.0, 0.0]),
            13.0,
            max_relative = 1e-14
        );
    }
}
