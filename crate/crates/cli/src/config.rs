use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pseudosphere::flatness::FlatnessConfig;
use pseudosphere::geometry::ShapeSpec;
use pseudosphere::kuran::SearchConfig;
use pseudosphere::quadrature::QuadConfig;
use pseudosphere::stability::StabilityConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Gap,
    Index,
    Stability,
    Classify,
    Oracles,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Pipeline {
    One(Stage),
    Many(Vec<Stage>),
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline::Many(vec![Stage::Stability, Stage::Classify])
    }
}

impl Pipeline {
    pub fn stages(&self) -> Vec<Stage> {
        match self {
            Pipeline::One(s) => vec![*s],
            Pipeline::Many(v) => v.clone(),
        }
    }

    pub fn has(&self, s: Stage) -> bool {
        self.stages().contains(&s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlatnessOptions {
    pub cone_angles_deg: Vec<f64>,
    pub dirs_per_ring: usize,
}

impl Default for FlatnessOptions {
    fn default() -> Self {
        let d = FlatnessConfig::default();
        FlatnessOptions {
            cone_angles_deg: d.cone_angles_deg,
            dirs_per_ring: d.dirs_per_ring,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityOptions {
    pub max_touching_points: usize,
    pub index_tol: f64,
    pub volume_tol: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        let d = StabilityConfig::default();
        StabilityOptions {
            max_touching_points: d.max_touching_points,
            index_tol: d.index_tol,
            volume_tol: d.volume_tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    /// Polyline segments for the n = 2 appendix integral.
    pub segments: usize,
    /// Approximate triangle count for n = 3.
    pub faces: usize,
    /// Analytic-sphere checks run for 4..=max_n.
    pub max_n: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            segments: 10_000,
            faces: 100_000,
            max_n: 6,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub report: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub stability_table: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub shape: Option<ShapeSpec>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub pipeline: Pipeline,
    /// Used by every surface integral of the run.
    #[serde(default)]
    pub quadrature: QuadConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub flatness: FlatnessOptions,
    #[serde(default)]
    pub stability: StabilityOptions,
    #[serde(default)]
    pub oracles: OracleOptions,
    #[serde(default)]
    pub outputs: Outputs,
}

impl RunConfig {
    pub fn default_oracles() -> Self {
        RunConfig {
            shape: None,
            x0: None,
            pipeline: Pipeline::One(Stage::Oracles),
            quadrature: QuadConfig::default(),
            search: SearchConfig::default(),
            flatness: FlatnessOptions::default(),
            stability: StabilityOptions::default(),
            oracles: OracleOptions::default(),
            outputs: Outputs::default(),
        }
    }

    pub fn needs_shape(&self) -> bool {
        self.pipeline.stages().iter().any(|s| *s != Stage::Oracles)
    }

    pub fn flatness_config(&self) -> FlatnessConfig {
        FlatnessConfig {
            quadrature: self.quadrature.clone(),
            cone_angles_deg: self.flatness.cone_angles_deg.clone(),
            dirs_per_ring: self.flatness.dirs_per_ring,
        }
    }

    pub fn stability_config(&self) -> StabilityConfig {
        StabilityConfig {
            search: self.search.clone(),
            flatness: self.flatness_config(),
            max_touching_points: self.stability.max_touching_points,
            index_tol: self.stability.index_tol,
            volume_tol: self.stability.volume_tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pipeline.stages().is_empty() {
            bail!("pipeline is empty");
        }
        if self.needs_shape() {
            if self.shape.is_none() {
                bail!("field `shape` is required by the pipeline");
            }
            if self.x0.is_none() {
                bail!("field `x0` is required by the pipeline");
            }
        }
        Ok(())
    }
}

/// One axis of a sweep: a JSON pointer into the base run config and the
/// values it takes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// e.g. `/shape/semi_axes/0`
    pub param: String,
    #[serde(default)]
    pub values: Option<Vec<serde_json::Value>>,
    #[serde(default)]
    pub range: Option<Range>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    /// Number of points, endpoints included.
    pub steps: usize,
}

impl SweepAxis {
    pub fn points(&self) -> Result<Vec<serde_json::Value>> {
        match (&self.values, &self.range) {
            (Some(v), None) if !v.is_empty() => Ok(v.clone()),
            (None, Some(r)) if r.steps >= 1 => Ok((0..r.steps)
                .map(|i| {
                    let f = if r.steps == 1 {
                        0.0
                    } else {
                        i as f64 / (r.steps - 1) as f64
                    };
                    serde_json::json!(r.start + f * (r.stop - r.start))
                })
                .collect()),
            _ => bail!(
                "sweep axis `{}` needs exactly one of a non-empty `values` or a `range` with steps >= 1",
                self.param
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// A run config, kept as JSON so axes can address any field.
    pub base: serde_json::Value,
    pub grid: Vec<SweepAxis>,
}

/// Parses JSON with the failing field path and position in the message.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path.is_empty() || path == "." {
            anyhow::anyhow!("{origin}: {inner}")
        } else {
            anyhow::anyhow!("{origin}: field `{path}`: {inner}")
        }
    })
}

pub fn parse_value<T: DeserializeOwned>(v: serde_json::Value, origin: &str) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("{origin}: field `{path}`: {}", e.into_inner())
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let cfg: RunConfig = parse_json(&read_text(path)?, &path.display().to_string())?;
    cfg.validate()
        .with_context(|| format!("{}", path.display()))?;
    Ok(cfg)
}

pub fn load_sweep_config(path: &Path) -> Result<SweepConfig> {
    parse_json(&read_text(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_accepts_a_name_or_a_list() {
        let c: RunConfig = parse_json(r#"{"pipeline": "oracles"}"#, "t").unwrap();
        assert_eq!(c.pipeline.stages(), vec![Stage::Oracles]);
        assert!(c.validate().is_ok());
        let c: RunConfig = parse_json(r#"{"pipeline": ["gap", "index"]}"#, "t").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_field_reports_its_path() {
        let e = parse_json::<RunConfig>(r#"{"search": {"seeds": 3}}"#, "cfg.json")
            .unwrap_err()
            .to_string();
        assert!(e.contains("search"), "{e}");
        assert!(e.contains("seeds"), "{e}");
        assert!(e.contains("line 1"), "{e}");
    }

    #[test]
    fn range_axis_includes_endpoints() {
        let a = SweepAxis {
            param: "/x".into(),
            values: None,
            range: Some(Range {
                start: 1.0,
                stop: 2.0,
                steps: 5,
            }),
        };
        let p = a.points().unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(p[4], serde_json::json!(2.0));
    }
}
