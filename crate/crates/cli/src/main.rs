mod config;
mod output;
mod pipeline;
mod sweep;

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use pseudosphere::geometry::{make_shape_in, BoundaryKind, ShapeKind, ShapeSpec};

use config::{
    load_run_config, load_sweep_config, parse_json, read_text, Pipeline, RunConfig, Stage,
};
use output::write_json;
use pipeline::{convergence_table, run_pipeline, stability_table, summary, ShapeSummary};

#[derive(Parser, Debug)]
#[command(
    name = "pseudosphere",
    version,
    about = "Kuran gaps, flatness indices and stability checks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Configuration file (JSON); may also be given positionally.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the current directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Force fixed-order reductions.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Worker threads.
    #[arg(long, global = true, env = "PSEUDOSPHERE_THREADS")]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the configured pipeline and write report.json and tables.
    Run { path: Option<PathBuf> },
    /// Run a parameter grid, one pipeline per cell.
    Sweep { path: Option<PathBuf> },
    /// Closed-form reference integrals.
    Oracles { path: Option<PathBuf> },
    /// Describe a shape: a shape or run config, an OFF mesh or a CSV polyline.
    MeshInfo {
        path: Option<PathBuf>,
        /// Interior point for the touching set, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x0: Option<Vec<f64>>,
    },
}

fn config_path(positional: Option<PathBuf>, flag: &Option<PathBuf>) -> Result<PathBuf> {
    match (positional, flag.clone()) {
        (Some(p), None) | (None, Some(p)) => Ok(p),
        (Some(_), Some(_)) => bail!("give the configuration either positionally or with --config"),
        (None, None) => bail!("a configuration file is required"),
    }
}

fn parent(p: &Path) -> Option<&Path> {
    p.parent().filter(|d| !d.as_os_str().is_empty())
}

fn execute(cfg: &RunConfig, base: Option<&Path>, cli: &Cli, label: &str) -> Result<i32> {
    let t = Instant::now();
    let report = run_pipeline(cfg, base)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let report_path = cfg
        .outputs
        .report
        .clone()
        .unwrap_or_else(|| out.join("report.json"));
    write_json(&report_path, &report)?;
    let mut written = vec![report_path];
    if !report.all_indices().is_empty() {
        let p = cfg
            .outputs
            .table
            .clone()
            .unwrap_or_else(|| out.join("table.csv"));
        convergence_table(&report).write(&p)?;
        written.push(p);
    }
    if report.stability.is_some() {
        let p = cfg
            .outputs
            .stability_table
            .clone()
            .unwrap_or_else(|| out.join("stability.csv"));
        stability_table(label, &report).write(&p)?;
        written.push(p);
    }
    println!("{}", summary(&report));
    if cli.verbose {
        for p in &written {
            eprintln!("wrote {}", p.display());
        }
        eprintln!("elapsed {:.2?}", t.elapsed());
    }
    Ok(report.exit_code())
}

fn mesh_info(path: &Path, x0: Option<Vec<f64>>) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let base = parent(path);
    let (spec, cfg_x0): (ShapeSpec, Option<Vec<f64>>) = match ext.as_str() {
        "json" => {
            let text = read_text(path)?;
            let v: serde_json::Value =
                serde_json::from_str(&text).with_context(|| format!("{}", path.display()))?;
            if v.get("shape").is_some() {
                let c: RunConfig = parse_json(&text, &path.display().to_string())?;
                (c.shape.expect("checked"), c.x0)
            } else {
                (parse_json(&text, &path.display().to_string())?, None)
            }
        }
        "off" => (
            ShapeKind::Mesh {
                path: Some(path.to_path_buf()),
                vertices: None,
                faces: None,
            }
            .into(),
            None,
        ),
        "csv" => (
            ShapeKind::Polyline {
                points: None,
                path: Some(path.to_path_buf()),
            }
            .into(),
            None,
        ),
        _ => bail!("{}: expected a .json, .off or .csv file", path.display()),
    };
    let base = if ext == "json" { base } else { None };
    let b = make_shape_in(&spec, base)?;
    let s = ShapeSummary::of(&b);
    println!("kind: {}", s.kind);
    println!("dimension: {}", s.n);
    println!("closed: {}", s.closed);
    println!("surface measure: {}", output::fmt_f64(s.surface_measure));
    match s.volume {
        Some(v) => println!("enclosed volume: {}", output::fmt_f64(v)),
        None => println!("enclosed volume: none"),
    }
    match b.kind() {
        BoundaryKind::Mesh(m) => {
            let mut edges: std::collections::HashMap<(usize, usize), usize> = Default::default();
            for f in &m.faces {
                for (a, c) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                    *edges.entry((a.min(c), a.max(c))).or_default() += 1;
                }
            }
            let used: HashSet<usize> = m.faces.iter().flatten().copied().collect();
            let euler = used.len() as i64 - edges.len() as i64 + m.faces.len() as i64;
            let (lo, hi) = (0..m.faces.len())
                .map(|i| m.face_diameter(i))
                .fold((f64::INFINITY, 0.0f64), |(l, h), d| (l.min(d), h.max(d)));
            println!("vertices: {}", m.vertices.len());
            println!("faces: {}", m.faces.len());
            println!("edges: {}", edges.len());
            println!("euler characteristic: {euler}");
            println!("watertight: {}", edges.values().all(|c| *c == 2));
            println!(
                "face diameter: {} .. {}",
                output::fmt_f64(lo),
                output::fmt_f64(hi)
            );
        }
        BoundaryKind::Polyline(p) => {
            let (lo, hi) = (0..p.len())
                .map(|i| p.segment_length(i))
                .fold((f64::INFINITY, 0.0f64), |(l, h), d| (l.min(d), h.max(d)));
            println!("segments: {}", p.len());
            println!(
                "segment length: {} .. {}",
                output::fmt_f64(lo),
                output::fmt_f64(hi)
            );
        }
        _ => {}
    }
    if let Some(x0) = x0.or(cfg_x0) {
        let ts = b.touching_set(&x0, None)?;
        println!("inscribed radius at x0: {}", output::fmt_f64(ts.radius));
        println!(
            "touching points: {}{}",
            ts.points.len(),
            if ts.full_sphere {
                " (whole sphere, sampled)"
            } else {
                ""
            }
        );
    }
    Ok(())
}

fn real_main(cli: &Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.cmd {
        Cmd::Run { path } => {
            let p = config_path(path.clone(), &cli.config)?;
            let mut cfg = load_run_config(&p)?;
            if cli.deterministic {
                cfg.quadrature.deterministic = true;
            }
            let label = p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("shape")
                .to_string();
            execute(&cfg, parent(&p), cli, &label)
        }
        Cmd::Oracles { path } => {
            let (mut cfg, base) = match config_path(path.clone(), &cli.config) {
                Ok(p) => (load_run_config(&p)?, parent(&p).map(Path::to_path_buf)),
                Err(_) => (RunConfig::default_oracles(), None),
            };
            cfg.pipeline = Pipeline::One(Stage::Oracles);
            if cli.deterministic {
                cfg.quadrature.deterministic = true;
            }
            execute(&cfg, base.as_deref(), cli, "oracles")
        }
        Cmd::Sweep { path } => {
            let p = config_path(path.clone(), &cli.config)?;
            let s = load_sweep_config(&p)?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let violated = sweep::run_sweep(&s, &out, parent(&p), cli.deterministic, cli.verbose)?;
            println!("wrote {}", out.join("sweep.csv").display());
            Ok(if violated { 2 } else { 0 })
        }
        Cmd::MeshInfo { path, x0 } => {
            let p = config_path(path.clone(), &cli.config)?;
            mesh_info(&p, x0.clone())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
