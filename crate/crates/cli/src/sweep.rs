//! Cartesian parameter sweeps. Every cell writes its own files under
//! `cells/`; a cell whose summary already exists with the same parameters
//! is not recomputed.

use std::path::Path;

use anyhow::{anyhow, bail, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{parse_json, parse_value, RunConfig, SweepConfig};
use crate::output::{fmt_f64, write_json, Table};
use crate::pipeline::{class_name, run_pipeline, Report};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gap: Option<f64>,
    pub gap_budget: Option<f64>,
    pub min_index: Option<f64>,
    /// Largest right-hand side over the touching points.
    pub rhs: Option<f64>,
    /// `gap - rhs`
    pub margin: Option<f64>,
    pub class: Option<String>,
    pub violated: bool,
}

impl SweepRow {
    pub fn of(r: &Report) -> Self {
        let gap = r.gap().map(|g| g.value);
        let rhs = r
            .stability
            .as_ref()
            .and_then(|s| s.rhs_theorem.iter().copied().reduce(f64::max));
        SweepRow {
            gap,
            gap_budget: r.gap().map(|g| g.error_budget),
            min_index: r.all_indices().iter().map(|i| i.value).reduce(f64::min),
            rhs,
            margin: gap.zip(rhs).map(|(g, h)| g - h),
            class: r
                .classification
                .as_ref()
                .map(|c| class_name(&c.class).to_string()),
            violated: r.violated,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct CellFile {
    index: usize,
    params: Vec<Value>,
    row: SweepRow,
}

/// All parameter combinations; the last axis varies fastest.
fn cells(points: &[Vec<Value>]) -> Vec<Vec<Value>> {
    points.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect()
    })
}

fn cell_config(base: &Value, params: &[String], values: &[Value]) -> Result<Value> {
    let mut v = base.clone();
    for (p, x) in params.iter().zip(values) {
        let slot = v
            .pointer_mut(p)
            .ok_or_else(|| anyhow!("sweep parameter `{p}` does not address a field of `base`"))?;
        *slot = x.clone();
    }
    Ok(v)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn value_cell(v: &Value) -> String {
    match v.as_f64() {
        Some(f) if !v.is_i64() && !v.is_u64() => fmt_f64(f),
        _ => v.to_string(),
    }
}

/// Runs the sweep; returns whether any cell reported a violation.
pub fn run_sweep(
    sweep: &SweepConfig,
    out: &Path,
    base_dir: Option<&Path>,
    deterministic: bool,
    verbose: bool,
) -> Result<bool> {
    let params: Vec<String> = sweep.grid.iter().map(|a| a.param.clone()).collect();
    let points: Vec<Vec<Value>> = sweep
        .grid
        .iter()
        .map(|a| a.points())
        .collect::<Result<_>>()?;
    if points.is_empty() {
        bail!("sweep grid is empty");
    }
    let all = cells(&points);
    let configs: Vec<RunConfig> = all
        .iter()
        .enumerate()
        .map(|(i, vals)| {
            let v = cell_config(&sweep.base, &params, vals)?;
            let mut c: RunConfig = parse_value(v, &format!("sweep cell {i}"))?;
            if deterministic {
                c.quadrature.deterministic = true;
            }
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<_>>()?;

    let cell_dir = out.join("cells");
    let results: Vec<Result<CellFile>> = configs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| {
            let path = cell_dir.join(format!("cell_{i:05}.json"));
            if let Ok(text) = std::fs::read_to_string(&path) {
                if let Ok(done) = parse_json::<CellFile>(&text, "cell") {
                    if done.params == all[i] {
                        if verbose {
                            eprintln!("cell {i}: reusing {}", path.display());
                        }
                        return Ok(done);
                    }
                }
            }
            let report =
                run_pipeline(cfg, base_dir).map_err(|e| anyhow!("sweep cell {i}: {e:#}"))?;
            write_json(&cell_dir.join(format!("cell_{i:05}.report.json")), &report)?;
            let cell = CellFile {
                index: i,
                params: all[i].clone(),
                row: SweepRow::of(&report),
            };
            // the summary is written last; its presence marks the cell done
            write_json(&path, &cell)?;
            if verbose {
                eprintln!("cell {i}: done");
            }
            Ok(cell)
        })
        .collect();

    let mut header: Vec<&str> = vec!["cell"];
    header.extend(params.iter().map(|s| s.as_str()));
    header.extend([
        "gap",
        "gap_budget",
        "min_index",
        "rhs",
        "margin",
        "class",
        "violated",
    ]);
    let mut table = Table::new(&header);
    let mut errors = Vec::new();
    let mut violated = false;
    for r in results {
        match r {
            Ok(c) => {
                violated |= c.row.violated;
                let mut row = vec![c.index.to_string()];
                row.extend(c.params.iter().map(value_cell));
                row.extend([
                    opt(c.row.gap),
                    opt(c.row.gap_budget),
                    opt(c.row.min_index),
                    opt(c.row.rhs),
                    opt(c.row.margin),
                    c.row.class.clone().unwrap_or_default(),
                    c.row.violated.to_string(),
                ]);
                table.push(row);
            }
            Err(e) => errors.push(format!("{e:#}")),
        }
    }
    table.write(&out.join("sweep.csv"))?;
    if !errors.is_empty() {
        bail!(
            "{} of {} cells failed:\n{}",
            errors.len(),
            all.len(),
            errors.join("\n")
        );
    }
    Ok(violated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn cartesian_order_has_last_axis_fastest() {
        let c = cells(&[
            vec![json!(1), json!(2)],
            vec![json!("a"), json!("b"), json!("c")],
        ]);
        assert_eq!(c.len(), 6);
        assert_eq!(c[1], vec![json!(1), json!("b")]);
        assert_eq!(c[3], vec![json!(2), json!("a")]);
    }

    #[test]
    fn parameters_must_exist_in_base() {
        let base = json!({"shape": {"radius": 1.0}});
        let ok = cell_config(&base, &["/shape/radius".into()], &[json!(2.0)]).unwrap();
        assert_eq!(ok["shape"]["radius"], json!(2.0));
        assert!(cell_config(&base, &["/shape/amp".into()], &[json!(2.0)]).is_err());
    }
}
