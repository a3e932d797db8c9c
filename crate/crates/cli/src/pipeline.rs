use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use pseudosphere::flatness::{spherical_flatness_index, IndexEstimate};
use pseudosphere::geometry::{make_shape_in, Boundary, BoundaryKind};
use pseudosphere::kuran::{kuran_gap, GapEstimate};
use pseudosphere::quadrature::rules::adaptive_gk_semi_infinite;
use pseudosphere::quadrature::{omega, reference_appendix_integral, sigma, AppendixCheck};
use pseudosphere::stability::{
    check_theorem, classify_report, Classification, ShapeClass, StabilityReport, Verdict,
};

use crate::config::{RunConfig, Stage};
use crate::output::{fmt_f64, Table};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapeSummary {
    pub kind: String,
    pub n: usize,
    pub elements: Option<usize>,
    pub closed: bool,
    pub surface_measure: f64,
    pub volume: Option<f64>,
}

impl ShapeSummary {
    pub fn of(b: &Boundary) -> Self {
        let elements = match b.kind() {
            BoundaryKind::Polyline(p) => Some(p.len()),
            BoundaryKind::Mesh(m) => Some(m.faces.len()),
            _ => None,
        };
        ShapeSummary {
            kind: b.kind_name().to_string(),
            n: b.dim(),
            elements,
            closed: b.is_closed(),
            surface_measure: b.surface_measure(),
            volume: b.enclosed_volume().ok(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoissonCheck {
    pub n: usize,
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Oracles {
    pub appendix: Vec<AppendixCheck>,
    pub poisson: Vec<PoissonCheck>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub shape: Option<ShapeSummary>,
    pub x0: Option<Vec<f64>>,
    pub deterministic: bool,
    pub gap: Option<GapEstimate>,
    /// Indices computed outside a stability check.
    pub indices: Vec<IndexEstimate>,
    pub stability: Option<StabilityReport>,
    pub classification: Option<Classification>,
    pub oracles: Option<Oracles>,
    pub violated: bool,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.violated {
            2
        } else {
            0
        }
    }

    pub fn gap(&self) -> Option<&GapEstimate> {
        self.stability
            .as_ref()
            .map(|s| &s.gap)
            .or(self.gap.as_ref())
    }

    pub fn all_indices(&self) -> &[IndexEstimate] {
        match &self.stability {
            Some(s) => &s.index_per_z,
            None => &self.indices,
        }
    }
}

pub fn build_shape(cfg: &RunConfig, base: Option<&Path>) -> Result<(Boundary, Vec<f64>)> {
    let (Some(spec), Some(x0)) = (&cfg.shape, &cfg.x0) else {
        bail!("the pipeline needs `shape` and `x0`");
    };
    let b = make_shape_in(spec, base).context("building shape")?;
    if x0.len() != b.dim() {
        bail!(
            "x0 has dimension {} but the shape has dimension {}",
            x0.len(),
            b.dim()
        );
    }
    Ok((b, x0.clone()))
}

pub fn run_oracles(cfg: &RunConfig) -> Result<Oracles> {
    let o = &cfg.oracles;
    let mut appendix = vec![
        reference_appendix_integral(2, o.segments)?,
        reference_appendix_integral(3, o.faces)?,
    ];
    for n in 4..=o.max_n {
        appendix.push(reference_appendix_integral(n, 0)?);
    }
    let poisson = (2..=o.max_n.max(2))
        .map(|n| {
            let k = n as i32;
            let i = adaptive_gk_semi_infinite(
                |s| s.powi(k - 2) * (1.0 + s * s).powf(-(n as f64) / 2.0),
                0.0,
                1e-15,
                1e-14,
            );
            let value = 2.0 / (n as f64 * omega(n)) * sigma(n - 1) * i.value;
            PoissonCheck {
                n,
                value,
                error: (value - 1.0).abs(),
            }
        })
        .collect();
    Ok(Oracles { appendix, poisson })
}

pub fn run_pipeline(cfg: &RunConfig, base: Option<&Path>) -> Result<Report> {
    let p = &cfg.pipeline;
    let mut report = Report {
        shape: None,
        x0: cfg.x0.clone(),
        deterministic: cfg.quadrature.deterministic,
        gap: None,
        indices: Vec::new(),
        stability: None,
        classification: None,
        oracles: None,
        violated: false,
    };
    if cfg.needs_shape() {
        let (b, x0) = build_shape(cfg, base)?;
        report.shape = Some(ShapeSummary::of(&b));
        if p.has(Stage::Stability) || p.has(Stage::Classify) {
            let scfg = cfg.stability_config();
            let rep = check_theorem(&b, &x0, &scfg)?;
            if p.has(Stage::Classify) {
                report.classification = Some(classify_report(&rep, &scfg));
            }
            report.violated = rep.any_violated();
            report.stability = Some(rep);
        } else {
            if p.has(Stage::Gap) {
                report.gap = Some(kuran_gap(&b, &x0, &cfg.search, &cfg.quadrature)?);
            }
            if p.has(Stage::Index) {
                let ts = b.touching_set(&x0, None)?;
                let m = cfg.stability.max_touching_points.max(1);
                let count = ts.points.len().min(m);
                let fcfg = cfg.flatness_config();
                for i in 0..count {
                    let z = &ts.points[i * ts.points.len() / count];
                    report
                        .indices
                        .push(spherical_flatness_index(&b, &x0, z, &fcfg)?);
                }
            }
        }
    }
    if p.has(Stage::Oracles) {
        report.oracles = Some(run_oracles(cfg)?);
    }
    Ok(report)
}

fn verdict_name(v: &Verdict) -> &'static str {
    match v {
        Verdict::Holds { .. } => "holds",
        Verdict::Violated { .. } => "violated",
        Verdict::Inconclusive { .. } => "inconclusive",
    }
}

pub fn class_name(c: &ShapeClass) -> &'static str {
    match c {
        ShapeClass::IsSphere => "is_sphere",
        ShapeClass::NotAPseudosphere { .. } => "not_a_pseudosphere",
        ShapeClass::ConsistentWithPseudosphere => "consistent_with_pseudosphere",
        ShapeClass::Inconclusive { .. } => "inconclusive",
    }
}

/// Convergence table of every flatness index in the report.
pub fn convergence_table(r: &Report) -> Table {
    let mut t = Table::new(&[
        "z_index",
        "direction",
        "j",
        "radius",
        "k",
        "t",
        "value",
        "inner_limit",
        "outer_limit",
    ]);
    for (zi, ix) in r.all_indices().iter().enumerate() {
        for (d, rows) in ix.table.iter().enumerate() {
            for (j, row) in rows.iter().enumerate() {
                for (k, v) in row.iter().enumerate() {
                    t.push(vec![
                        zi.to_string(),
                        d.to_string(),
                        j.to_string(),
                        fmt_f64(ix.radii[j]),
                        k.to_string(),
                        fmt_f64(ix.approach[k]),
                        fmt_f64(*v),
                        fmt_f64(ix.inner_limits[d][j].value),
                        fmt_f64(ix.outer_limits[d].value),
                    ]);
                }
            }
        }
    }
    t
}

/// One row per touching point; `margin = gap - rhs`.
pub fn stability_table(label: &str, r: &Report) -> Table {
    let mut t = Table::new(&[
        "shape",
        "z",
        "index",
        "index_error",
        "gap",
        "gap_budget",
        "rhs",
        "margin",
        "budget",
        "verdict",
    ]);
    if let Some(s) = &r.stability {
        for (tc, ix) in s.theorem.iter().zip(&s.index_per_z) {
            let z: Vec<String> = tc.z.iter().map(|c| fmt_f64(*c)).collect();
            t.push(vec![
                label.to_string(),
                z.join(" "),
                fmt_f64(tc.index),
                fmt_f64(ix.error_estimate),
                fmt_f64(s.gap.value),
                fmt_f64(s.gap.error_budget),
                fmt_f64(tc.rhs),
                fmt_f64(s.gap.value - tc.rhs),
                fmt_f64(tc.budget),
                verdict_name(&tc.verdict).to_string(),
            ]);
        }
    }
    t
}

pub fn summary(r: &Report) -> String {
    let mut out = Vec::new();
    if let Some(s) = &r.shape {
        out.push(format!(
            "shape: {} (n = {}), |∂Ω| = {:.10}{}",
            s.kind,
            s.n,
            s.surface_measure,
            s.volume
                .map(|v| format!(", |Ω| = {v:.10}"))
                .unwrap_or_default()
        ));
    }
    if let Some(g) = r.gap() {
        out.push(format!(
            "gap: {:.10e} ± {:.2e} at α = {:?}",
            g.value, g.error_budget, g.argmax_alpha
        ));
    }
    for ix in r.all_indices() {
        out.push(format!(
            "index at z = {:?}: {:.10} ± {:.2e}{}",
            ix.z,
            ix.value,
            ix.error_estimate,
            if ix.non_convergent {
                " (non-convergent)"
            } else {
                ""
            }
        ));
    }
    if let Some(s) = &r.stability {
        for t in &s.theorem {
            let m = s.gap.value - t.rhs;
            out.push(format!(
                "theorem at z = {:?}: rhs = {:.10e}, margin = {:.3e}, {}",
                t.z,
                t.rhs,
                m,
                verdict_name(&t.verdict)
            ));
        }
        out.push(format!(
            "corollary: rhs = {:.10e}, {}",
            s.rhs_cor2,
            verdict_name(&s.corollary)
        ));
        out.push(format!(
            "isoperimetric: {:.10e} >= {:.10e}, {}",
            s.iso.lhs,
            s.iso.rhs,
            verdict_name(&s.isoperimetric)
        ));
    }
    if let Some(c) = &r.classification {
        out.push(format!("classification: {}", class_name(&c.class)));
    }
    if let Some(o) = &r.oracles {
        for a in &o.appendix {
            out.push(format!(
                "appendix n = {} ({:?}): {:.12} vs {:.12}, abs error {:.2e}",
                a.n, a.route, a.result.value, a.exact, a.abs_error
            ));
        }
        for p in &o.poisson {
            out.push(format!(
                "poisson n = {}: {:.15}, error {:.1e}",
                p.n, p.value, p.error
            ));
        }
    }
    if r.violated {
        out.push("VIOLATED: the numerics contradict the stability inequality".into());
    }
    out.join("\n")
}
