use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

const QUICK_SEARCH: &str =
    r#"{"seeds_per_shell": 8, "refine_top": 2, "pattern_iters": 80, "delta_levels": 2}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pseudosphere"));
    c.env_remove("PSEUDOSPHERE_THREADS");
    c
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn run_config(shape: Value, x0: Value) -> Value {
    json!({
        "shape": shape,
        "x0": x0,
        "pipeline": ["stability", "classify"],
        "search": serde_json::from_str::<Value>(QUICK_SEARCH).unwrap(),
    })
}

fn text(o: &Output) -> String {
    format!(
        "{}\n{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

#[test]
fn oracles_report_minus_pi_for_the_disc() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "oracles.json",
        &json!({"pipeline": "oracles", "oracles": {"segments": 10000, "faces": 5000, "max_n": 4}}),
    );
    let o = run(&["run", &cfg, "--out", "res"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("appendix n = 2"));
    let rep: Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("res/report.json")).unwrap())
            .unwrap();
    let a = &rep["oracles"]["appendix"][0];
    assert_eq!(a["exact"].as_f64().unwrap(), -std::f64::consts::PI);
    assert!(a["abs_error"].as_f64().unwrap() < 1e-4);
    assert_eq!(rep["oracles"]["poisson"].as_array().unwrap().len(), 3);
}

#[test]
fn ball_is_a_sphere_and_rows_are_self_consistent() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "ball.json",
        &run_config(
            json!({"kind": "ball", "n": 2, "radius": 2.0, "center": [0.5, 0.0]}),
            json!([0.5, 0.0]),
        ),
    );
    let o = run(&["run", "--config", &cfg, "--out", "out"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(
        text(&o).contains("classification: is_sphere"),
        "{}",
        text(&o)
    );
    let mut rdr = csv::Reader::from_path(d.path().join("out/stability.csv")).unwrap();
    let h = rdr.headers().unwrap().clone();
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    let mut rows = 0;
    for r in rdr.records() {
        let r = r.unwrap();
        let f = |name: &str| r[col(name)].parse::<f64>().unwrap();
        assert_eq!(f("margin"), f("gap") - f("rhs"));
        assert!(f("gap") <= 3.0 * f("gap_budget"));
        assert_eq!(&r[col("verdict")], "holds");
        rows += 1;
    }
    assert_eq!(rows, 8);
    assert!(d.path().join("out/table.csv").exists());
}

#[test]
fn ellipse_is_not_a_pseudosphere_with_positive_margin() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "ellipse.json",
        &run_config(
            json!({"kind": "ellipse", "semi_axes": [1.5, 1.0]}),
            json!([0.0, 0.0]),
        ),
    );
    let o = run(&["run", &cfg, "--out", "."], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("not_a_pseudosphere"));
    let rep: Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("report.json")).unwrap()).unwrap();
    let s = &rep["stability"];
    let gap = s["gap"]["value"].as_f64().unwrap();
    for rhs in s["rhs_theorem"].as_array().unwrap() {
        assert!(gap - rhs.as_f64().unwrap() > 0.0);
    }
}

#[test]
fn deterministic_reruns_are_bit_identical() {
    let d = tempfile::tempdir().unwrap();
    let mut c = run_config(
        json!({"kind": "perturbed_circle", "radius": 1.0, "amplitude": 0.1, "k": 3}),
        json!([0.05, 0.0]),
    );
    c["pipeline"] = json!(["gap", "index"]);
    let cfg = write(d.path(), "pc.json", &c);
    let a = run(&["run", &cfg, "--out", "a", "--deterministic"], d.path());
    let b = bin()
        .args(["run", &cfg, "--out", "b", "--deterministic"])
        .env("PSEUDOSPHERE_THREADS", "1")
        .current_dir(d.path())
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0), "{}", text(&a));
    assert_eq!(b.status.code(), Some(0), "{}", text(&b));
    let ra = fs::read(d.path().join("a/report.json")).unwrap();
    let rb = fs::read(d.path().join("b/report.json")).unwrap();
    assert!(ra == rb);
    // every float carries 17 significant digits
    let s = String::from_utf8(ra).unwrap();
    assert!(s.contains("\"value\": "));
    let v: Value = serde_json::from_str(&s).unwrap();
    assert!(v["gap"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_errors_name_the_field_and_exit_1() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("bad.json");
    fs::write(
        &p,
        "{\n  \"pipeline\": \"gap\",\n  \"search\": {\"seeds\": 3}\n}\n",
    )
    .unwrap();
    let o = run(&["run", p.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(1));
    let e = text(&o);
    assert!(
        e.contains("search") && e.contains("seeds") && e.contains("line 3"),
        "{e}"
    );

    let cfg = write(
        d.path(),
        "dim.json",
        &run_config(
            json!({"kind": "ball", "n": 3, "radius": 1.0}),
            json!([0.0, 0.0]),
        ),
    );
    let o = run(&["run", &cfg], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("dimension"), "{}", text(&o));

    let o = run(&["run"], d.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn radius_sweep_is_zero_gap_and_resumable() {
    let d = tempfile::tempdir().unwrap();
    let mut base = run_config(
        json!({"kind": "ball", "n": 2, "radius": 1.0}),
        json!([0.0, 0.0]),
    );
    base["pipeline"] = json!(["gap"]);
    let cfg = write(
        d.path(),
        "sweep.json",
        &json!({"base": base, "grid": [{"param": "/shape/radius", "range": {"start": 0.5, "stop": 2.0, "steps": 3}}]}),
    );
    let o = run(&["sweep", &cfg, "--out", "sw"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let mut rdr = csv::Reader::from_path(d.path().join("sw/sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let gap: f64 = r[2].parse().unwrap();
        let budget: f64 = r[3].parse().unwrap();
        assert!(gap <= 3.0 * budget, "{r:?}");
    }
    assert_eq!(rows[2][1].parse::<f64>().unwrap(), 2.0);

    let o = run(&["sweep", &cfg, "--out", "sw", "--verbose"], d.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(text(&o).matches("reusing").count(), 3, "{}", text(&o));
}

#[test]
fn mesh_info_describes_an_off_tetrahedron() {
    let d = tempfile::tempdir().unwrap();
    let off = "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";
    fs::write(d.path().join("tet.off"), off).unwrap();
    let o = run(&["mesh-info", "tet.off", "--x0", "0.1,0.1,0.1"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let t = text(&o);
    assert!(t.contains("faces: 4"), "{t}");
    assert!(t.contains("euler characteristic: 2"), "{t}");
    assert!(t.contains("watertight: true"), "{t}");
    assert!(t.contains("enclosed volume: 1.6666666666666666e-1"), "{t}");
    assert!(
        t.contains("inscribed radius at x0: 1.0000000000000001e-1"),
        "{t}"
    );
}
