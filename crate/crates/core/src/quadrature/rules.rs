//! Elementary quadrature rules: Gauss-Legendre on intervals, small
//! triangle rules, adaptive Gauss-Kronrod for 1-D reference integrals and
//! a deterministic pairwise summation.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut x = vec![0.0; order];
    let mut w = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess, then Newton on P_order.
        let mut z = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[order - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[order - 1 - i] = wi;
    }
    (x, w)
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint: P_n'(±1) = (±1)^{n-1} n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// Per-element rule selector from the quadrature config block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ElementRule {
    /// 4-point Gauss-Legendre on segments and radial panels.
    #[default]
    Gauss4,
    /// 8-point Gauss-Legendre.
    Gauss8,
    /// Centroid plus 3-point interior rule on triangles; segments fall back
    /// to 4-point Gauss-Legendre.
    Centroid3,
}

impl ElementRule {
    pub fn line_order(self) -> usize {
        match self {
            ElementRule::Gauss4 | ElementRule::Centroid3 => 4,
            ElementRule::Gauss8 => 8,
        }
    }
}

/// Gauss-Legendre rule mapped to [0, 1].
#[derive(Clone, Debug)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UnitRule {
    pub fn gauss(order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        UnitRule {
            nodes: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|w| 0.5 * w).collect(),
        }
    }
}

/// Barycentric nodes and weights (summing to 1) of a triangle rule.
pub struct TriangleRule {
    pub bary: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

pub const TRI_CENTROID: TriangleRule = TriangleRule {
    bary: &[[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]],
    weights: &[1.0],
};

/// Degree-2 interior rule (Strang-Fix).
pub const TRI_THREE: TriangleRule = TriangleRule {
    bary: &[
        [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    ],
    weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
};

/// Degree-4 six-point rule (Dunavant).
pub const TRI_SIX: TriangleRule = TriangleRule {
    bary: &[
        [
            0.108_103_018_168_070,
            0.445_948_490_915_965,
            0.445_948_490_915_965,
        ],
        [
            0.445_948_490_915_965,
            0.108_103_018_168_070,
            0.445_948_490_915_965,
        ],
        [
            0.445_948_490_915_965,
            0.445_948_490_915_965,
            0.108_103_018_168_070,
        ],
        [
            0.816_847_572_980_459,
            0.091_576_213_509_771,
            0.091_576_213_509_771,
        ],
        [
            0.091_576_213_509_771,
            0.816_847_572_980_459,
            0.091_576_213_509_771,
        ],
        [
            0.091_576_213_509_771,
            0.091_576_213_509_771,
            0.816_847_572_980_459,
        ],
    ],
    weights: &[
        0.223_381_589_678_011,
        0.223_381_589_678_011,
        0.223_381_589_678_011,
        0.109_951_743_655_322,
        0.109_951_743_655_322,
        0.109_951_743_655_322,
    ],
};

/// Deterministic pairwise (tree) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if v.len() <= LEAF {
        let mut s = 0.0;
        for x in v {
            s += x;
        }
        return s;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Sum in a fixed pairwise order, or as a rayon reduction whose
/// association depends on scheduling.
pub fn reduce_sum(v: &[f64], deterministic: bool) -> f64 {
    if deterministic {
        pairwise_sum(v)
    } else {
        use rayon::prelude::*;
        v.par_iter().sum()
    }
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Result of a 1-D adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Adaptive1d {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Globally adaptive Gauss-Kronrod 7/15 on a finite interval.
pub fn adaptive_gk<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Adaptive1d {
    let mut intervals = vec![(a, b, gk15(&f, a, b))];
    let mut evaluations = 15;
    for _ in 0..2000 {
        let value: f64 = intervals.iter().map(|i| i.2 .0).sum();
        let error: f64 = intervals.iter().map(|i| i.2 .1).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            break;
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("non-empty");
        let (lo, hi, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, gk15(&f, lo, mid)));
        intervals.push((mid, hi, gk15(&f, mid, hi)));
        evaluations += 30;
    }
    intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
    let values: Vec<f64> = intervals.iter().map(|i| i.2 .0).collect();
    Adaptive1d {
        value: pairwise_sum(&values),
        error: intervals.iter().map(|i| i.2 .1).sum(),
        evaluations,
    }
}

/// Adaptive integration over [a, ∞) with the map s = a + u/(1-u).
pub fn adaptive_gk_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Adaptive1d {
    let g = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - u;
        let s = a + u / one_minus;
        let v = f(s) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adaptive_gk(g, 0.0, 1.0, abs_tol, rel_tol)
}
