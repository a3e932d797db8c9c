//! Kuran gap `K(∂Ω, x0) = sup_{α ∉ Ω̄} |⨍ k_{α-x0}(x - x0) dσ|` by
//! multi-start pattern search over exterior points at clearance ≥ δ.
//!
//! The reported value is the largest objective actually evaluated, so it is
//! a lower bound on the supremum up to quadrature error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mean_unchecked;
use crate::error::{Error, Result};
use crate::geometry::{Boundary, PointClass};
use crate::point::{axpy, complement_basis, dist, normalized, sub};
use crate::quadrature::QuadConfig;

/// Objectives below this are indistinguishable from roundoff in the
/// cancellation `1 + ⨍h ≈ 0`; the objective is dimensionless.
const ROUNDOFF_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Finest clearance δ0 relative to the inscribed radius r.
    pub delta_rel: f64,
    /// Boundary samples per offset shell.
    pub seeds_per_shell: usize,
    /// Seed offsets along the outward normal, in units of δ.
    pub shells: Vec<f64>,
    /// An extra seed shell at offset `outer_shell · r` (0 disables).
    pub outer_shell: f64,
    /// Objective evaluations per local search.
    pub pattern_iters: usize,
    /// Seeds refined by local search, best first.
    pub refine_top: usize,
    /// Clearances `δ0 2^{L-1}, ..., 2δ0, δ0`.
    pub delta_levels: usize,
    /// Local search stops below this step, relative to r.
    pub min_step_rel: f64,
    pub grid_oracle: bool,
    pub grid_resolution: usize,
    /// Exterior points always refined, in global coordinates.
    pub extra_seeds: Vec<Vec<f64>>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            delta_rel: 1e-3,
            seeds_per_shell: 32,
            shells: vec![1.0, 2.0, 8.0, 32.0],
            outer_shell: 1.0,
            pattern_iters: 400,
            refine_top: 6,
            delta_levels: 3,
            min_step_rel: 1e-7,
            grid_oracle: false,
            grid_resolution: 200,
            extra_seeds: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelBest {
    pub delta: f64,
    pub value: f64,
    pub alpha: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridScan {
    pub resolution: usize,
    pub points: usize,
    pub value: f64,
    pub alpha: Vec<f64>,
    /// The grid found more than the search plus its budget.
    pub search_undershoot: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub value: f64,
    /// Global coordinates.
    pub argmax_alpha: Vec<f64>,
    pub search_trace: Vec<TracePoint>,
    /// Finest clearance δ0.
    pub boundary_offset: f64,
    pub levels: Vec<LevelBest>,
    /// Linear extrapolation of the level maxima to δ = 0.
    pub extrapolated: f64,
    /// `|fine - coarse|` of the mean at the argmax.
    pub quadrature_error: f64,
    pub error_budget: f64,
    pub inscribed_radius: f64,
    pub evaluations: usize,
    pub grid: Option<GridScan>,
}

struct Ctx<'a> {
    b: &'a Boundary,
    x0: &'a [f64],
    cfg: &'a QuadConfig,
    r: f64,
    far: f64,
}

impl Ctx<'_> {
    fn objective(&self, alpha: &[f64]) -> Result<f64> {
        let rel = sub(alpha, self.x0);
        Ok(mean_unchecked(self.b, self.x0, &rel, alpha, self.cfg)?
            .value
            .abs())
    }

    /// Moves `p` to clearance ≥ δ along the away-from-boundary direction;
    /// `None` if `p` is not exterior or too far.
    fn admissible(&self, p: &[f64], delta: f64) -> Option<Vec<f64>> {
        if dist(p, self.x0) > self.far {
            return None;
        }
        let c = self.b.closest(p);
        if c.dist <= 1e-12 * self.r {
            return None;
        }
        let out = self.b.classify_point(p, 0.0).ok()? == PointClass::Outside;
        if !out {
            return None;
        }
        if c.dist >= delta * (1.0 - 1e-12) {
            return Some(p.to_vec());
        }
        let q = axpy(&c.point, delta, &normalized(&sub(p, &c.point)));
        let ok = self.b.classify_point(&q, 0.0).ok()? == PointClass::Outside
            && self.b.distance(&q) >= delta * (1.0 - 1e-9);
        ok.then_some(q)
    }

    /// First-improvement compass search in the frame (normal, tangents).
    fn pattern_search(
        &self,
        start: Vec<f64>,
        f0: f64,
        delta: f64,
        iters: usize,
        min_step: f64,
    ) -> Result<(Vec<f64>, f64, Vec<TracePoint>, usize)> {
        let (mut a, mut best) = (start, f0);
        let mut trace = Vec::new();
        let mut evals = 0;
        let max_step = self.r;
        let mut step = (0.5 * self.b.distance(&a)).clamp(delta, max_step);
        while step > min_step && evals < iters {
            let c = self.b.closest(&a);
            let nu = normalized(&sub(&a, &c.point));
            let mut dirs = vec![nu.clone(), nu.iter().map(|v| -v).collect()];
            for t in complement_basis(&nu, None) {
                dirs.push(t.iter().map(|v| -v).collect());
                dirs.push(t);
            }
            let mut moved = false;
            for d in &dirs {
                let Some(cand) = self.admissible(&axpy(&a, step, d), delta) else {
                    continue;
                };
                let f = self.objective(&cand)?;
                evals += 1;
                if f > best {
                    a = cand;
                    best = f;
                    trace.push(TracePoint {
                        alpha: a.clone(),
                        objective: f,
                        delta,
                    });
                    moved = true;
                    break;
                }
                if evals >= iters {
                    break;
                }
            }
            step = if moved {
                (2.0 * step).min(max_step)
            } else {
                0.5 * step
            };
        }
        Ok((a, best, trace, evals))
    }

    fn seeds(&self, delta: f64, sc: &SearchConfig) -> Vec<Vec<f64>> {
        let mut base = self.b.samples(sc.seeds_per_shell);
        if let Ok(ts) = self.b.touching_set(self.x0, None) {
            for z in ts.points.iter().take(8) {
                base.push((z.to_vec(), self.b.closest(z).normal));
            }
        }
        if let Some(far) = base
            .iter()
            .max_by(|p, q| dist(&p.0, self.x0).total_cmp(&dist(&q.0, self.x0)))
            .cloned()
        {
            base.push(far);
        }
        let mut offsets: Vec<f64> = sc.shells.iter().map(|s| s * delta).collect();
        if sc.outer_shell > 0.0 {
            offsets.push(sc.outer_shell * self.r);
        }
        let mut out = Vec::new();
        for (p, nu) in &base {
            for s in &offsets {
                if let Some(a) = self.admissible(&axpy(p, *s, nu), delta) {
                    out.push(a);
                }
            }
        }
        out
    }
}

pub fn kuran_gap(
    b: &Boundary,
    x0: &[f64],
    sc: &SearchConfig,
    cfg: &QuadConfig,
) -> Result<GapEstimate> {
    if !b.is_closed() {
        return Err(Error::NotClosed);
    }
    let ts = b.touching_set(x0, None)?;
    let r = ts.radius;
    let ctx = Ctx {
        b,
        x0,
        cfg,
        r,
        far: 1e3 * b.length_scale() + dist(x0, &b.closest(x0).point),
    };
    let delta0 = sc.delta_rel * r;
    let min_step = sc.min_step_rel * r;
    let mut trace = Vec::new();
    let mut levels: Vec<LevelBest> = Vec::new();
    let mut evaluations = 0;
    for l in (0..sc.delta_levels.max(1)).rev() {
        let delta = delta0 * 2f64.powi(l as i32);
        let seeds = ctx.seeds(delta, sc);
        let vals: Vec<f64> = seeds
            .par_iter()
            .map(|a| ctx.objective(a))
            .collect::<Result<_>>()?;
        evaluations += seeds.len();
        for (a, v) in seeds.iter().zip(&vals) {
            trace.push(TracePoint {
                alpha: a.clone(),
                objective: *v,
                delta,
            });
        }
        let mut order: Vec<usize> = (0..seeds.len()).collect();
        order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]).then(i.cmp(&j)));
        let mut starts: Vec<(Vec<f64>, f64)> = order
            .iter()
            .take(sc.refine_top)
            .map(|&i| (seeds[i].clone(), vals[i]))
            .collect();
        // levels are independent so that adding seeds can only raise each level
        for a in &sc.extra_seeds {
            if let Some(a) = ctx.admissible(a, delta) {
                let v = ctx.objective(&a)?;
                evaluations += 1;
                starts.push((a, v));
            }
        }
        let runs: Vec<_> = starts
            .into_par_iter()
            .map(|(a, v)| ctx.pattern_search(a, v, delta, sc.pattern_iters, min_step))
            .collect::<Result<_>>()?;
        let mut best = LevelBest {
            delta,
            value: f64::NEG_INFINITY,
            alpha: Vec::new(),
        };
        if let Some(&i0) = order.first() {
            best.value = vals[i0];
            best.alpha = seeds[i0].clone();
        }
        for (a, v, t, e) in runs {
            evaluations += e;
            trace.extend(t);
            if v > best.value {
                best.value = v;
                best.alpha = a;
            }
        }
        if best.alpha.is_empty() {
            return Err(Error::Unsupported("no admissible exterior seed".into()));
        }
        levels.push(best);
    }

    let mut top = levels[0].clone();
    for lb in &levels[1..] {
        if lb.value > top.value {
            top = lb.clone();
        }
    }
    let mut grid = None;
    if sc.grid_oracle {
        let g = grid_scan(&ctx, sc.grid_resolution, delta0)?;
        evaluations += g.points;
        if g.value > top.value {
            top = LevelBest {
                delta: delta0,
                value: g.value,
                alpha: g.alpha.clone(),
            };
        }
        grid = Some(g);
    }
    let at = mean_unchecked(b, x0, &sub(&top.alpha, x0), &top.alpha, cfg)?;
    let value = top.value;
    let extrapolated = match levels.len() {
        0 | 1 => value,
        m => {
            let (fine, coarse) = (levels[m - 1].value, levels[m - 2].value);
            if fine >= coarse {
                value.max(2.0 * fine - coarse)
            } else {
                value
            }
        }
    };
    let error_budget = at.error_estimate + (extrapolated - value).abs() + ROUNDOFF_FLOOR;
    if let Some(g) = grid.as_mut() {
        g.search_undershoot = g.value
            > levels
                .iter()
                .map(|l| l.value)
                .fold(f64::NEG_INFINITY, f64::max)
                + error_budget;
    }
    Ok(GapEstimate {
        value,
        argmax_alpha: top.alpha,
        search_trace: trace,
        boundary_offset: delta0,
        levels,
        extrapolated,
        quadrature_error: at.error_estimate,
        error_budget,
        inscribed_radius: r,
        evaluations,
        grid,
    })
}

/// Exterior points of a regular grid over the bounding box grown by r;
/// each axis gets `res` points (n = 2) or `res/4` points (n = 3).
fn grid_scan(ctx: &Ctx<'_>, res: usize, delta: f64) -> Result<GridScan> {
    let n = ctx.b.dim();
    if n > 3 {
        return Err(Error::Unsupported("grid oracle for n > 3".into()));
    }
    let per_axis = if n == 2 { res } else { (res / 4).max(4) };
    let samples = ctx.b.samples(1024);
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for (p, _) in &samples {
        for k in 0..n {
            lo[k] = lo[k].min(p[k] - ctx.r);
            hi[k] = hi[k].max(p[k] + ctx.r);
        }
    }
    let total = per_axis.pow(n as u32);
    let pts: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|k| {
                    let i = idx % per_axis;
                    idx /= per_axis;
                    lo[k] + (hi[k] - lo[k]) * i as f64 / (per_axis - 1) as f64
                })
                .collect::<Vec<f64>>()
        })
        .filter(|p| {
            ctx.b.classify_point(p, 0.0).ok() == Some(PointClass::Outside)
                && ctx.b.distance(p) >= delta
        })
        .collect();
    let vals: Vec<f64> = pts
        .par_iter()
        .map(|a| ctx.objective(a))
        .collect::<Result<_>>()?;
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, v) in vals.iter().enumerate() {
        if *v > best.0 {
            best = (*v, i);
        }
    }
    Ok(GridScan {
        resolution: per_axis,
        points: pts.len(),
        value: best.0,
        alpha: pts.get(best.1).cloned().unwrap_or_default(),
        search_undershoot: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_shape, ShapeKind};

    fn disc(center: [f64; 2], radius: f64) -> Boundary {
        make_shape(
            &ShapeKind::Ball {
                n: 2,
                center: Some(center.to_vec()),
                radius,
                segments: None,
                frequency: None,
            }
            .into(),
        )
        .unwrap()
    }

    fn quick() -> SearchConfig {
        SearchConfig {
            seeds_per_shell: 12,
            refine_top: 3,
            pattern_iters: 150,
            ..Default::default()
        }
    }

    #[test]
    fn centered_disc_has_zero_gap() {
        let g = kuran_gap(
            &disc([0.0, 0.0], 1.0),
            &[0.0, 0.0],
            &quick(),
            &QuadConfig::default(),
        )
        .unwrap();
        assert!(
            g.value <= 3.0 * g.error_budget,
            "{} vs {}",
            g.value,
            g.error_budget
        );
    }

    #[test]
    fn off_center_disc_gap_is_positive_and_dominates_the_grid() {
        let sc = SearchConfig {
            grid_oracle: true,
            grid_resolution: 40,
            ..quick()
        };
        let g = kuran_gap(
            &disc([0.0, 0.0], 1.0),
            &[0.3, 0.0],
            &sc,
            &QuadConfig::default(),
        )
        .unwrap();
        assert!(g.value > 0.1);
        let grid = g.grid.as_ref().unwrap();
        assert!(
            !grid.search_undershoot,
            "grid {} search {}",
            grid.value, g.value
        );
        assert!(dist(&g.argmax_alpha, &[0.0, 0.0]) >= 1.0 + g.boundary_offset * (1.0 - 1e-9));
    }

    #[test]
    fn extra_seeds_never_lower_the_value() {
        let b = disc([0.0, 0.0], 1.0);
        let cfg = QuadConfig::default();
        let g0 = kuran_gap(&b, &[0.3, 0.0], &quick(), &cfg).unwrap();
        let sc = SearchConfig {
            extra_seeds: vec![vec![0.0, 2.0], vec![-1.5, -0.2]],
            ..quick()
        };
        let g1 = kuran_gap(&b, &[0.3, 0.0], &sc, &cfg).unwrap();
        assert!(g1.value >= g0.value);
    }

    #[test]
    fn exterior_center_is_rejected() {
        let r = kuran_gap(
            &disc([0.0, 0.0], 1.0),
            &[2.0, 0.0],
            &quick(),
            &QuadConfig::default(),
        );
        assert!(matches!(r, Err(Error::CenterNotInterior(_))));
    }
}
