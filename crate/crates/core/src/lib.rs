//! Kuran gaps, touching sets and spherical flatness indices of bounded
//! domains, with the quadrature needed to evaluate them near singularities.

// `!(x > 0.0)` rejects NaN as well; index loops mirror the linear algebra
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod flatness;
pub mod geometry;
pub mod kuran;
pub mod point;
pub mod quadrature;
pub mod stability;

pub use error::{Error, Result};
pub use point::{Point, Similarity};
