//! Points in R^n and the small amount of linear algebra the crate needs.
//!
//! Hot loops work on plain `&[f64]` slices; [`Point`] is the owned,
//! validated form used at API boundaries.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// A point (or vector) in R^n with n >= 2 and finite coordinates.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidPoint(format!(
                "dimension must be >= 2, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        Ok(Point(coords))
    }

    /// Builds a point without validation. Used internally where the
    /// coordinates come from arithmetic on already valid points.
    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn zeros(n: usize) -> Self {
        Point(vec![0.0; n])
    }

    /// The i-th standard basis vector of R^n.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Point(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn dist(&self, other: &[f64]) -> f64 {
        dist(&self.0, other)
    }

    pub fn sub(&self, other: &[f64]) -> Point {
        Point(sub(&self.0, other))
    }

    pub fn add(&self, other: &[f64]) -> Point {
        Point(self.0.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    pub fn scaled(&self, s: f64) -> Point {
        Point(self.0.iter().map(|a| a * s).collect())
    }

    /// `self + s * dir`
    pub fn offset(&self, dir: &[f64], s: f64) -> Point {
        Point(axpy(&self.0, s, dir))
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Point {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<[f64; 2]> for Point {
    fn from(c: [f64; 2]) -> Self {
        Point(c.to_vec())
    }
}

impl From<[f64; 3]> for Point {
    fn from(c: [f64; 3]) -> Self {
        Point(c.to_vec())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm2(a).sqrt()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let l = norm(a);
    a.iter().map(|x| x / l).collect()
}

/// Removes from `v` its component along the unit vector `e`.
pub fn reject(v: &[f64], e: &[f64]) -> Vec<f64> {
    let c = dot(v, e);
    axpy(v, -c, e)
}

pub fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// A unit vector orthogonal to the unit vector `e`, preferring the
/// direction of `hint` when it is not parallel to `e`.
pub fn orthogonal_unit(e: &[f64], hint: Option<&[f64]>) -> Vec<f64> {
    let n = e.len();
    if let Some(h) = hint {
        let r = reject(h, e);
        if norm(&r) > 1e-9 * norm(h).max(1e-300) {
            return normalized(&r);
        }
    }
    if n == 2 {
        return vec![-e[1], e[0]];
    }
    // Gram-Schmidt against the basis vector least aligned with e.
    let mut best = 0;
    for i in 1..n {
        if e[i].abs() < e[best].abs() {
            best = i;
        }
    }
    let mut b = vec![0.0; n];
    b[best] = 1.0;
    normalized(&reject(&b, e))
}

/// An orthonormal basis of the orthogonal complement of the unit vector `e`,
/// starting with `orthogonal_unit(e, hint)`.
pub fn complement_basis(e: &[f64], hint: Option<&[f64]>) -> Vec<Vec<f64>> {
    let n = e.len();
    let mut basis: Vec<Vec<f64>> = vec![orthogonal_unit(e, hint)];
    for i in 0..n {
        if basis.len() == n - 1 {
            break;
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v = reject(&v, e);
        for b in &basis {
            v = reject(&v, b);
        }
        if norm(&v) > 1e-6 {
            basis.push(normalized(&v));
        }
    }
    basis
}

/// An orthogonal similarity `x -> scale * Q x + shift`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    /// Row-major orthogonal matrix.
    pub rotation: Vec<Vec<f64>>,
    pub scale: f64,
    pub shift: Vec<f64>,
}

impl Similarity {
    pub fn identity(n: usize) -> Self {
        Similarity {
            rotation: (0..n).map(|i| Point::unit(n, i).into_vec()).collect(),
            scale: 1.0,
            shift: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// Planar rotation by `angle` combined with scale and shift.
    pub fn planar(angle: f64, scale: f64, shift: [f64; 2]) -> Self {
        let (s, c) = angle.sin_cos();
        Similarity {
            rotation: vec![vec![c, -s], vec![s, c]],
            scale,
            shift: shift.to_vec(),
        }
    }

    /// Rotation about a unit axis in R^3 (Rodrigues).
    pub fn axis_angle(axis: [f64; 3], angle: f64, scale: f64, shift: [f64; 3]) -> Self {
        let k = normalized(&axis);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let rotation = vec![
            vec![
                c + k[0] * k[0] * t,
                k[0] * k[1] * t - k[2] * s,
                k[0] * k[2] * t + k[1] * s,
            ],
            vec![
                k[1] * k[0] * t + k[2] * s,
                c + k[1] * k[1] * t,
                k[1] * k[2] * t - k[0] * s,
            ],
            vec![
                k[2] * k[0] * t - k[1] * s,
                k[2] * k[1] * t + k[0] * s,
                c + k[2] * k[2] * t,
            ],
        ];
        Similarity {
            rotation,
            scale,
            shift: shift.to_vec(),
        }
    }

    pub fn rotate(&self, v: &[f64]) -> Vec<f64> {
        self.rotation.iter().map(|row| dot(row, v)).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rotate(x)
            .iter()
            .zip(&self.shift)
            .map(|(r, b)| self.scale * r + b)
            .collect()
    }

    pub fn apply_point(&self, x: &Point) -> Point {
        Point::from_vec(self.apply(x))
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        let n = self.dim();
        self.rotation.len() == n
            && (0..n).all(|i| {
                self.rotation[i].len() == n
                    && (0..n).all(|j| {
                        let d = dot(&self.rotation[i], &self.rotation[j]);
                        let want = if i == j { 1.0 } else { 0.0 };
                        (d - want).abs() <= tol
                    })
            })
    }
}

/// Row-major product `a * b` of square matrices.
pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, v)).collect()
}

/// `a^T v`
pub fn mat_t_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|j| (0..n).map(|i| a[i][j] * v[i]).sum())
        .collect()
}

pub fn identity_matrix(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| Point::unit(n, i).into_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_points() {
        assert!(Point::new(vec![1.0]).is_err());
        assert!(Point::new(vec![1.0, f64::NAN]).is_err());
        assert!(Point::new(vec![1.0, 2.0, 3.0]).is_ok());
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        let e = normalized(&[0.3, -0.4, 0.5, 0.1]);
        let b = complement_basis(&e, Some(&[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(b.len(), 3);
        for (i, u) in b.iter().enumerate() {
            assert!(dot(u, &e).abs() < 1e-12);
            assert!((norm(u) - 1.0).abs() < 1e-12);
            for v in &b[..i] {
                assert!(dot(u, v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn axis_angle_is_orthogonal() {
        let s = Similarity::axis_angle([1.0, 2.0, -0.5], 0.7, 2.0, [1.0, 0.0, 0.0]);
        assert!(s.is_orthogonal(1e-12));
        let x = s.apply(&[0.0, 0.0, 0.0]);
        assert_eq!(x, vec![1.0, 0.0, 0.0]);
    }
}
