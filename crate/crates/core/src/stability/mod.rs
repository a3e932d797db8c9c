//! Both sides of the gap/index stability inequality
//!
//! `K(∂Ω, x0) ≥ (|∂Ω| - S_z |∂B|) / |∂Ω|`,  `B = B(x0, r)`, `r = dist(x0, ∂Ω)`,
//!
//! its corollaries, the isoperimetric lower bound, and a classification of
//! the shape against the pseudosphere characterisation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flatness::{spherical_flatness_index, FlatnessConfig, IndexEstimate};
use crate::geometry::{Boundary, BoundaryKind, SmoothSource};
use crate::kuran::{kuran_gap, GapEstimate, SearchConfig};
use crate::point::{dist, Point};
use crate::quadrature::{omega, sigma};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub search: SearchConfig,
    pub flatness: FlatnessConfig,
    /// Touching points examined when the touching set is large.
    pub max_touching_points: usize,
    /// `S_z` is "≤ 1" when below `1 + index_tol`, "< 1" below `1 - index_tol`.
    pub index_tol: f64,
    /// `|Ω \ B| / |Ω|` below this counts as zero.
    pub volume_tol: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            search: SearchConfig::default(),
            flatness: FlatnessConfig::default(),
            max_touching_points: 8,
            index_tol: 1e-2,
            volume_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// `margin = lhs + budget - rhs ≥ 0`.
    Holds {
        margin: f64,
    },
    /// `margin = rhs - lhs - budget > 0`.
    Violated {
        margin: f64,
    },
    Inconclusive {
        reason: String,
    },
}

impl Verdict {
    fn compare(lhs: f64, rhs: f64, budget: f64) -> Verdict {
        let m = lhs + budget - rhs;
        if m >= 0.0 {
            Verdict::Holds { margin: m }
        } else {
            Verdict::Violated { margin: -m }
        }
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub z: Vec<f64>,
    pub index: f64,
    pub rhs: f64,
    /// Gap budget plus the index and touching-radius contributions.
    pub budget: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoChain {
    /// `|∂Ω| - |∂B|`
    pub lhs: f64,
    /// `(n-1) ω_n^{1/n} |Ω \ B| / |Ω|^{1/n}`
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub n: usize,
    pub x0: Vec<f64>,
    pub surface_measure: f64,
    pub volume: f64,
    pub inscribed_radius: f64,
    /// Discrete boundaries approximate their source to O(h²) in r.
    pub radius_uncertainty: f64,
    pub ball_measure: f64,
    pub ball_volume: f64,
    pub gap: GapEstimate,
    pub index_per_z: Vec<IndexEstimate>,
    pub rhs_theorem: Vec<f64>,
    pub rhs_cor2: f64,
    pub iso: IsoChain,
    /// `iso.rhs / |∂Ω|`, the isoperimetric lower bound on the gap.
    pub iso_rhs: f64,
    pub theorem: Vec<TheoremCheck>,
    pub corollary: Verdict,
    pub isoperimetric: Verdict,
}

impl StabilityReport {
    pub fn any_violated(&self) -> bool {
        self.theorem.iter().any(|t| t.verdict.is_violated())
            || self.corollary.is_violated()
            || self.isoperimetric.is_violated()
    }

    pub fn min_index(&self) -> Option<&IndexEstimate> {
        self.index_per_z
            .iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
    }
}

/// `(|∂Ω| - S_z |∂B|) / |∂Ω|` with `|∂B| = n ω_n r^{n-1}`, `r = |z - x0|`.
pub fn stability_rhs(b: &Boundary, x0: &[f64], z: &[f64], s_z: f64) -> f64 {
    let n = b.dim();
    let m = b.surface_measure();
    let ball = sigma(n) * dist(z, x0).powi(n as i32 - 1);
    (m - s_z * ball) / m
}

/// `(|∂Ω| - |∂B|, (n-1) ω_n^{1/n} |Ω \ B| / |Ω|^{1/n})`.
pub fn isoperimetric_chain(b: &Boundary, x0: &[f64]) -> Result<IsoChain> {
    let vol = b.enclosed_volume()?;
    let n = b.dim();
    let r = b.touching_set(x0, None)?.radius;
    let nf = n as f64;
    let ball_m = sigma(n) * r.powi(n as i32 - 1);
    let ball_v = omega(n) * r.powi(n as i32);
    Ok(IsoChain {
        lhs: b.surface_measure() - ball_m,
        rhs: (nf - 1.0) * omega(n).powf(1.0 / nf) * (vol - ball_v) / vol.powf(1.0 / nf),
    })
}

/// `|dist(x0, source) - r|` for discretised smooth shapes, else 0.
fn radius_uncertainty(b: &Boundary, x0: &[f64], touching: &[Point], r: f64) -> f64 {
    let src = match b.kind() {
        BoundaryKind::Polyline(p) => p.source.as_ref(),
        BoundaryKind::Mesh(m) => m.source.as_ref(),
        _ => None,
    };
    let Some(src) = src else { return 0.0 };
    let rs = match src {
        SmoothSource::Ball(ball) => ball.radius - dist(&ball.center, x0),
        SmoothSource::Star(_) => touching
            .iter()
            .map(|z| dist(&src.project(z), x0))
            .fold(f64::INFINITY, f64::min),
    };
    (rs - r).abs()
}

/// Evenly spaced subset of at most `m` points.
fn subsample(points: &[Point], m: usize) -> Vec<Vec<f64>> {
    let m = m.max(1);
    if points.len() <= m {
        return points.iter().map(|p| p.to_vec()).collect();
    }
    (0..m)
        .map(|i| points[i * points.len() / m].to_vec())
        .collect()
}

pub fn check_theorem(b: &Boundary, x0: &[f64], cfg: &StabilityConfig) -> Result<StabilityReport> {
    if !b.is_closed() {
        return Err(Error::NotClosed);
    }
    let n = b.dim();
    let ts = b.touching_set(x0, None)?;
    let r = ts.radius;
    let measure = b.surface_measure();
    let volume = b.enclosed_volume()?;
    let ball_measure = sigma(n) * r.powi(n as i32 - 1);
    let ball_volume = omega(n) * r.powi(n as i32);
    let dr = radius_uncertainty(b, x0, &ts.points, r);

    let gap = kuran_gap(b, x0, &cfg.search, &cfg.flatness.quadrature)?;
    let zs = subsample(&ts.points, cfg.max_touching_points);
    let index_per_z: Vec<IndexEstimate> = zs
        .iter()
        .map(|z| spherical_flatness_index(b, x0, z, &cfg.flatness))
        .collect::<Result<_>>()?;

    let ratio = ball_measure / measure;
    let radius_term = |s: f64| ratio * s.abs() * (n as f64 - 1.0) * dr / r;
    let mut rhs_theorem = Vec::new();
    let mut theorem = Vec::new();
    for ix in &index_per_z {
        let rhs = stability_rhs(b, x0, &ix.z, ix.value);
        let budget = gap.error_budget + ratio * ix.error_estimate + radius_term(ix.value);
        let verdict = if ix.non_convergent {
            Verdict::Inconclusive {
                reason: format!("flatness limits did not converge: {}", ix.flags.join("; ")),
            }
        } else {
            Verdict::compare(gap.value, rhs, budget)
        };
        rhs_theorem.push(rhs);
        theorem.push(TheoremCheck {
            z: ix.z.clone(),
            index: ix.value,
            rhs,
            budget,
            verdict,
        });
    }

    let rhs_cor2 = (measure - ball_measure) / measure;
    let applicable = index_per_z
        .iter()
        .filter(|ix| !ix.non_convergent && ix.value <= 1.0 + ix.error_estimate + cfg.index_tol)
        .min_by(|a, c| a.value.total_cmp(&c.value));
    let corollary = match applicable {
        Some(ix) => {
            let slack = ratio * ((ix.value - 1.0).max(0.0) + ix.error_estimate) + radius_term(1.0);
            Verdict::compare(gap.value, rhs_cor2, gap.error_budget + slack)
        }
        None => Verdict::Inconclusive {
            reason: "no converged touching point with S_z <= 1".into(),
        },
    };

    let iso = isoperimetric_chain(b, x0)?;
    let iso_budget = 1e-10 * measure + sigma(n) * (n as f64 - 1.0) * r.powi(n as i32 - 2) * dr;
    let isoperimetric = Verdict::compare(iso.lhs, iso.rhs, iso_budget);

    Ok(StabilityReport {
        n,
        x0: x0.to_vec(),
        surface_measure: measure,
        volume,
        inscribed_radius: r,
        radius_uncertainty: dr,
        ball_measure,
        ball_volume,
        gap,
        index_per_z,
        rhs_theorem,
        rhs_cor2,
        iso_rhs: iso.rhs / measure,
        iso,
        theorem,
        corollary,
        isoperimetric,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ShapeClass {
    IsSphere,
    NotAPseudosphere {
        reason: String,
        witness: Option<Vec<f64>>,
    },
    ConsistentWithPseudosphere,
    Inconclusive {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: ShapeClass,
    pub gap: f64,
    pub gap_budget: f64,
    pub min_index: f64,
    pub min_index_z: Vec<f64>,
    /// `|Ω \ B| / |Ω|`
    pub volume_defect: f64,
}

/// Classification from an existing report. A pseudosphere centred at x0
/// has zero gap and `S_z ≥ 1` at every touching point; with some
/// `S_z ≤ 1` it is the sphere `∂B(x0, r)`.
pub fn classify_report(rep: &StabilityReport, cfg: &StabilityConfig) -> Classification {
    let gap_zero = rep.gap.value <= 3.0 * rep.gap.error_budget;
    let min = rep.min_index().expect("touching set is non-empty");
    let volume_defect = (rep.volume - rep.ball_volume) / rep.volume;
    let vol_tol = cfg.volume_tol + rep.n as f64 * rep.radius_uncertainty / rep.inscribed_radius;
    let below = rep
        .index_per_z
        .iter()
        .find(|ix| !ix.non_convergent && ix.value < 1.0 - cfg.index_tol - ix.error_estimate);
    let flagged = rep.index_per_z.iter().any(|ix| ix.non_convergent);
    let class = if !gap_zero {
        ShapeClass::NotAPseudosphere {
            reason: format!(
                "gap {:e} exceeds 3 x budget {:e}",
                rep.gap.value, rep.gap.error_budget
            ),
            witness: Some(rep.gap.argmax_alpha.clone()),
        }
    } else if let Some(ix) = below {
        ShapeClass::NotAPseudosphere {
            reason: format!("S_z = {} < 1 at a touching point", ix.value),
            witness: Some(ix.z.clone()),
        }
    } else if flagged {
        ShapeClass::Inconclusive {
            reason: "flatness limits did not converge".into(),
        }
    } else if min.value <= 1.0 + cfg.index_tol + min.error_estimate
        && volume_defect.abs() <= vol_tol
    {
        ShapeClass::IsSphere
    } else {
        ShapeClass::ConsistentWithPseudosphere
    };
    Classification {
        class,
        gap: rep.gap.value,
        gap_budget: rep.gap.error_budget,
        min_index: min.value,
        min_index_z: min.z.clone(),
        volume_defect,
    }
}

pub fn classify(
    b: &Boundary,
    x0: &[f64],
    cfg: &StabilityConfig,
) -> Result<(Classification, StabilityReport)> {
    let rep = check_theorem(b, x0, cfg)?;
    Ok((classify_report(&rep, cfg), rep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_shape, ShapeKind};
    use approx::assert_relative_eq;

    fn shape(kind: ShapeKind) -> Boundary {
        make_shape(&kind.into()).unwrap()
    }

    fn disc(center: [f64; 2]) -> Boundary {
        shape(ShapeKind::Ball {
            n: 2,
            center: Some(center.to_vec()),
            radius: 1.0,
            segments: None,
            frequency: None,
        })
    }

    fn quick() -> StabilityConfig {
        StabilityConfig {
            search: SearchConfig {
                seeds_per_shell: 12,
                refine_top: 3,
                pattern_iters: 150,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn rhs_arithmetic() {
        let b = disc([0.0, 0.0]);
        assert_eq!(stability_rhs(&b, &[0.0, 0.0], &[1.0, 0.0], 1.0), 0.0);
        // |∂Ω| = 2π, |∂B| = π when r = 1/2
        assert_relative_eq!(
            stability_rhs(&b, &[0.5, 0.0], &[1.0, 0.0], 1.0),
            0.5,
            max_relative = 1e-15
        );
    }

    #[test]
    fn isoperimetric_chain_on_ball_and_ellipse() {
        let c = isoperimetric_chain(&disc([0.0, 0.0]), &[0.0, 0.0]).unwrap();
        assert!(c.lhs.abs() < 1e-12 && c.rhs.abs() < 1e-12);
        let e = shape(ShapeKind::Ellipse {
            center: None,
            semi_axes: [2.0, 1.0],
            angle: 0.0,
            segments: None,
        });
        let c = isoperimetric_chain(&e, &[0.0, 0.0]).unwrap();
        assert!(c.rhs > 0.0 && c.lhs >= c.rhs, "{c:?}");
    }

    #[test]
    fn centered_disc_is_a_sphere() {
        let (cl, rep) = classify(&disc([0.0, 0.0]), &[0.0, 0.0], &quick()).unwrap();
        assert_eq!(cl.class, ShapeClass::IsSphere, "{cl:?}");
        assert!(
            !rep.any_violated(),
            "{:?} {:?} {:?} {:?}",
            rep.theorem,
            rep.corollary,
            rep.isoperimetric,
            rep.gap.value
        );
        assert!(rep.rhs_cor2.abs() < 1e-12);
    }

    #[test]
    fn off_center_disc_has_positive_gap() {
        let (cl, rep) = classify(&disc([0.0, 0.0]), &[0.3, 0.0], &quick()).unwrap();
        assert!(
            matches!(cl.class, ShapeClass::NotAPseudosphere { .. }),
            "{cl:?}"
        );
        assert!((cl.min_index - 1.0).abs() < 1e-2);
        assert!(!rep.any_violated());
    }

    #[test]
    fn ellipse_holds_at_both_touching_points() {
        let e = shape(ShapeKind::Ellipse {
            center: None,
            semi_axes: [1.5, 1.0],
            angle: 0.0,
            segments: None,
        });
        let (cl, rep) = classify(&e, &[0.0, 0.0], &quick()).unwrap();
        assert_eq!(rep.theorem.len(), 2);
        for t in &rep.theorem {
            assert!(
                matches!(t.verdict, Verdict::Holds { margin } if margin > 0.0),
                "{t:?}"
            );
        }
        assert!(matches!(cl.class, ShapeClass::NotAPseudosphere { .. }));
    }
}
