//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use pseudosphere::flatness::{spherical_flatness_index, FlatnessConfig, IndexEstimate};
use pseudosphere::geometry::{make_shape, Boundary, ShapeSpec};
use pseudosphere::kuran::{kuran_gap, kuran_h, GapEstimate, SearchConfig};
use pseudosphere::quadrature::rules::adaptive_gk_semi_infinite;
use pseudosphere::quadrature::{omega, reference_appendix_integral, sigma, QuadConfig};
use pseudosphere::stability::{check_theorem, StabilityConfig, StabilityReport, Verdict};
use pseudosphere::Similarity;

const APPENDIX_ABS_TOL_2D: f64 = 1e-4;
const APPENDIX_REL_TOL_3D: f64 = 1e-3;
const APPENDIX_TIME_2D: Duration = Duration::from_secs(1);
const APPENDIX_TIME_3D: Duration = Duration::from_secs(30);
const INDEX_TOL: f64 = 1e-2;
const HALFSPACE_TIME: Duration = Duration::from_secs(60);
const GAP_BUDGET_MAX: f64 = 1e-3;
const INVARIANCE_GAP_REL: f64 = 1e-6;
const INVARIANCE_INDEX_ABS: f64 = 2e-3;
const HARMONIC_ORDER: f64 = 2.0;
const HARMONIC_ORDER_TOL: f64 = 0.3;
const POISSON_TOL: f64 = 1e-8;
const SEED: u64 = 0x5eed_0a11;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn shape(v: serde_json::Value) -> Boundary {
    let spec: ShapeSpec = serde_json::from_value(v).expect("valid shape spec");
    make_shape(&spec).expect("shape builds")
}

/// 3D runs use a smaller angular rule, direction fan and search; the 2D
/// runs use the library defaults.
fn quad3() -> QuadConfig {
    QuadConfig {
        angular: 16,
        ..Default::default()
    }
}

fn flat_cfg(n: usize) -> FlatnessConfig {
    if n == 2 {
        FlatnessConfig::default()
    } else {
        FlatnessConfig {
            quadrature: quad3(),
            dirs_per_ring: 4,
            ..Default::default()
        }
    }
}

fn search_cfg(n: usize) -> SearchConfig {
    if n == 2 {
        SearchConfig::default()
    } else {
        SearchConfig {
            seeds_per_shell: 12,
            refine_top: 2,
            pattern_iters: 120,
            delta_levels: 2,
            ..Default::default()
        }
    }
}

fn stab_cfg(n: usize) -> StabilityConfig {
    StabilityConfig {
        search: search_cfg(n),
        flatness: flat_cfg(n),
        max_touching_points: if n == 2 { 8 } else { 4 },
        ..Default::default()
    }
}

fn gap(b: &Boundary, x0: &[f64]) -> GapEstimate {
    let n = b.dim();
    let q = if n == 2 {
        QuadConfig::default()
    } else {
        quad3()
    };
    kuran_gap(b, x0, &search_cfg(n), &q).expect("gap")
}

fn index(b: &Boundary, x0: &[f64], z: &[f64]) -> IndexEstimate {
    spherical_flatness_index(b, x0, z, &flat_cfg(b.dim())).expect("index")
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn appendix_oracle() -> Check {
    let t = Instant::now();
    let c2 = reference_appendix_integral(2, 10_000).map_err(|e| e.to_string())?;
    let t2 = t.elapsed();
    let t = Instant::now();
    let c3 = reference_appendix_integral(3, 100_000).map_err(|e| e.to_string())?;
    let t3 = t.elapsed();
    ensure(
        c2.abs_error <= APPENDIX_ABS_TOL_2D
            && t2 < APPENDIX_TIME_2D
            && c3.rel_error <= APPENDIX_REL_TOL_3D
            && t3 < APPENDIX_TIME_3D,
        format!(
            "n=2 {:.10} vs {:.10} abs err {:.1e} in {:.2?}; n=3 {:.10} vs {:.10} rel err {:.1e} ({} faces) in {:.2?}",
            c2.result.value, c2.exact, c2.abs_error, t2, c3.result.value, c3.exact, c3.rel_error, c3.elements, t3
        ),
    )
}

fn halfspace_index() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2, 3] {
        for r in [0.5, 1.0, 2.0] {
            let b = shape(json!({"kind": "halfspace_cap", "n": n, "bounding_radius": 8.0}));
            let mut x0 = vec![0.0; n];
            x0[n - 1] = -r;
            let mut z = vec![0.0; n];
            z[n - 1] = 0.0;
            let t = Instant::now();
            let e = index(&b, &x0, &z);
            let dt = t.elapsed();
            ok &= (e.value - 1.0).abs() <= INDEX_TOL && dt < HALFSPACE_TIME;
            parts.push(format!("n={n} r={r}: {:.8} ({:.1?})", e.value, dt));
        }
    }
    ensure(ok, parts.join("; "))
}

fn centered_ball_index() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in [2, 3] {
        let b = shape(json!({"kind": "ball", "n": n, "radius": 1.0}));
        let x0 = vec![0.0; n];
        let ts = b.touching_set(&x0, None).map_err(|e| e.to_string())?;
        let m = ts.points.len();
        for i in 0..8 {
            let z = ts.points[i * m / 8].to_vec();
            worst = worst.max((index(&b, &x0, &z).value - 1.0).abs());
            count += 1;
        }
    }
    ensure(
        worst <= INDEX_TOL,
        format!("{count} touching points over n=2,3; max |S_z - 1| = {worst:.2e}"),
    )
}

fn off_center_ball_index() -> Check {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for n in [2, 3] {
        let b = shape(json!({"kind": "ball", "n": n, "radius": 1.0}));
        for off in [0.2, 0.5, 0.8] {
            let mut x1 = vec![0.0; n];
            x1[0] = off;
            let ts = b.touching_set(&x1, None).map_err(|e| e.to_string())?;
            let s = index(&b, &x1, &ts.points[0]).value;
            worst = worst.max((s - 1.0).abs());
            parts.push(format!("n={n} {off}: {s:.8}"));
        }
    }
    ensure(worst <= INDEX_TOL, parts.join("; "))
}

fn lipschitz_flat_bound() -> Check {
    let profiles = [
        json!({"profile": "quartic", "c": 0.2}),
        json!({"profile": "gaussian", "amp": 0.1, "width": 0.8}),
        json!({"profile": "paraboloid", "curvature": 0.5}),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for p in profiles {
        let name = p["profile"].as_str().unwrap_or("?").to_string();
        let b = shape(json!({
            "kind": "graph_patch", "n": 2, "height": 1.0, "profile": p,
            "patch_radius": 1.0, "window": [-1.0, 2.0]
        }));
        let x0 = [0.0, 0.0];
        let ts = b.touching_set(&x0, None).map_err(|e| e.to_string())?;
        let s = index(&b, &x0, &ts.points[0]).value;
        ok &= s <= 1.0 + INDEX_TOL;
        parts.push(format!("{name}: {s:.8}"));
    }
    ensure(ok, parts.join("; "))
}

fn sphere_gap() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2, 2, 2, 3, 3] {
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let r: f64 = rng.gen_range(0.3..3.0);
        let b = shape(json!({"kind": "ball", "n": n, "center": c, "radius": r}));
        let g = gap(&b, &c);
        ok &= g.value <= 3.0 * g.error_budget && g.error_budget <= GAP_BUDGET_MAX;
        parts.push(format!(
            "n={n} r={r:.3}: {:.1e} (budget {:.1e})",
            g.value, g.error_budget
        ));
    }
    ensure(ok, parts.join("; "))
}

fn invariance() -> Check {
    let b = shape(json!({"kind": "ellipse", "semi_axes": [1.4, 1.0], "angle": 0.3}));
    let x0 = [0.15, -0.05];
    let g0 = gap(&b, &x0).value;
    let z0 = b.touching_set(&x0, None).map_err(|e| e.to_string())?.points[0].to_vec();
    let s0 = index(&b, &x0, &z0).value;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let (mut dg, mut ds): (f64, f64) = (0.0, 0.0);
    for _ in 0..10 {
        let sim = Similarity::planar(
            rng.gen_range(0.0..std::f64::consts::TAU),
            2f64.powf(rng.gen_range(-2.0..2.0)),
            [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
        );
        let bt = b.transformed(&sim).map_err(|e| e.to_string())?;
        let xt = sim.apply(&x0);
        let zt = sim.apply(&z0);
        let ts = bt.touching_set(&xt, None).map_err(|e| e.to_string())?;
        let z = ts
            .points
            .iter()
            .min_by(|a, c| a.dist(&zt).total_cmp(&c.dist(&zt)))
            .expect("touching point")
            .to_vec();
        dg = dg.max((gap(&bt, &xt).value - g0).abs() / g0);
        ds = ds.max((index(&bt, &xt, &z).value - s0).abs());
    }
    ensure(
        dg <= INVARIANCE_GAP_REL && ds <= INVARIANCE_INDEX_ABS,
        format!("gap {g0:.10} max rel change {dg:.1e}; index {s0:.8} max change {ds:.1e}"),
    )
}

struct SuiteCase {
    name: &'static str,
    ball: bool,
    report: StabilityReport,
}

fn suite() -> &'static Vec<SuiteCase> {
    static SUITE: OnceLock<Vec<SuiteCase>> = OnceLock::new();
    SUITE.get_or_init(|| {
        let cases: Vec<(&'static str, bool, serde_json::Value, Vec<f64>)> = vec![
            (
                "disc",
                true,
                json!({"kind": "ball", "n": 2, "radius": 1.0}),
                vec![0.0, 0.0],
            ),
            (
                "off-center disc",
                false,
                json!({"kind": "ball", "n": 2, "radius": 1.0}),
                vec![0.3, 0.0],
            ),
            (
                "ellipse 1.5:1",
                false,
                json!({"kind": "ellipse", "semi_axes": [1.5, 1.0]}),
                vec![0.0, 0.0],
            ),
            (
                "ellipse 2:1",
                false,
                json!({"kind": "ellipse", "semi_axes": [2.0, 1.0], "angle": 0.4}),
                vec![0.3, 0.1],
            ),
            (
                "perturbed circle k=4",
                false,
                json!({"kind": "perturbed_circle", "radius": 1.0, "amplitude": 0.15, "k": 4}),
                vec![0.0, 0.0],
            ),
            (
                "perturbed circle k=3",
                false,
                json!({"kind": "perturbed_circle", "radius": 1.0, "amplitude": 0.1, "k": 3}),
                vec![0.05, 0.0],
            ),
            (
                "polygonal disc",
                false,
                json!({"kind": "ball", "n": 2, "radius": 1.0, "segments": 512}),
                vec![0.2, 0.1],
            ),
            (
                "ball",
                true,
                json!({"kind": "ball", "n": 3, "radius": 1.0}),
                vec![0.0, 0.0, 0.0],
            ),
            (
                "off-center ball",
                false,
                json!({"kind": "ball", "n": 3, "radius": 1.0}),
                vec![0.0, 0.4, 0.0],
            ),
            (
                "spheroid",
                false,
                json!({"kind": "ellipsoid", "semi_axes": [1.5, 1.0, 1.0]}),
                vec![0.0, 0.0, 0.0],
            ),
        ];
        cases
            .into_iter()
            .map(|(name, ball, spec, x0)| {
                let b = shape(spec);
                let report = check_theorem(&b, &x0, &stab_cfg(b.dim())).expect("stability report");
                SuiteCase { name, ball, report }
            })
            .collect()
    })
}

fn theorem_regression() -> Check {
    let mut ok = true;
    let mut checks = 0;
    let mut inconclusive = 0;
    let mut min_margin = f64::INFINITY;
    for c in suite() {
        for t in &c.report.theorem {
            checks += 1;
            match t.verdict {
                Verdict::Holds { margin } => min_margin = min_margin.min(margin),
                Verdict::Violated { margin } => {
                    ok = false;
                    eprintln!("  violated: {} at z = {:?} by {margin:e}", c.name, t.z);
                }
                Verdict::Inconclusive { .. } => inconclusive += 1,
            }
        }
        ok &= !c.report.corollary.is_violated();
    }
    ensure(
        ok,
        format!(
            "{} shapes, {checks} touching points, 0 violated required; smallest margin {min_margin:.3e}, {inconclusive} inconclusive",
            suite().len()
        ),
    )
}

fn isoperimetric_chain() -> Check {
    let mut ok = true;
    let mut worst_ball: f64 = 0.0;
    for c in suite() {
        let rep = &c.report;
        ok &= matches!(rep.isoperimetric, Verdict::Holds { .. });
        // rhs_cor2 >= iso_rhs, both exact arithmetic on the measures
        ok &= rep.rhs_cor2 >= rep.iso_rhs - 1e-10;
        if c.ball {
            let m = rep.iso.lhs.abs().max(rep.iso.rhs.abs()) / rep.surface_measure;
            worst_ball = worst_ball.max(m);
            ok &= m <= 1e-12;
        }
    }
    ensure(
        ok,
        format!(
            "{} shapes hold; balls give lhs = rhs = 0 to {worst_ball:.1e}",
            suite().len()
        ),
    )
}

/// Second-order central-difference Laplacian.
fn fd_laplacian(alpha: &[f64], x: &[f64], h: f64) -> f64 {
    let f = |y: &[f64]| kuran_h(alpha, y).expect("regular point");
    let c = f(x);
    let mut sum = 0.0;
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let p = f(&y);
        y[i] = x[i] - h;
        let m = f(&y);
        y[i] = x[i];
        sum += p - 2.0 * c + m;
    }
    sum / (h * h)
}

fn harmonicity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst: f64 = 0.0;
    let mut orders = Vec::new();
    for i in 0..50 {
        let n = 2 + i % 4;
        let unit = |rng: &mut ChaCha8Rng| {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let l = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.into_iter().map(|a| a / l).collect::<Vec<f64>>()
        };
        let a_len: f64 = rng.gen_range(0.5..2.0);
        let alpha: Vec<f64> = unit(&mut rng).iter().map(|u| a_len * u).collect();
        let d: f64 = rng.gen_range(0.5..2.0);
        let x: Vec<f64> = alpha
            .iter()
            .zip(unit(&mut rng))
            .map(|(a, u)| a + d * u)
            .collect();
        let h = 0.02;
        let p =
            (fd_laplacian(&alpha, &x, h).abs() / fd_laplacian(&alpha, &x, h / 2.0).abs()).log2();
        worst = worst.max((p - HARMONIC_ORDER).abs());
        orders.push(p);
    }
    let (lo, hi) = orders
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| {
            (l.min(*p), h.max(*p))
        });
    ensure(
        worst <= HARMONIC_ORDER_TOL,
        format!("50 points, n = 2..5; observed orders in [{lo:.3}, {hi:.3}]"),
    )
}

fn poisson_normalization() -> Check {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for n in 2..=6usize {
        let k = n as i32;
        let i = adaptive_gk_semi_infinite(
            |s| s.powi(k - 2) * (1.0 + s * s).powf(-(n as f64) / 2.0),
            0.0,
            1e-15,
            1e-14,
        );
        let v = 2.0 / (n as f64 * omega(n)) * sigma(n - 1) * i.value;
        worst = worst.max((v - 1.0).abs());
        parts.push(format!("n={n}: {v:.15}"));
    }
    ensure(worst <= POISSON_TOL, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("appendix oracle", appendix_oracle),
        ("halfspace index", halfspace_index),
        ("centered-ball index", centered_ball_index),
        ("off-center-ball index", off_center_ball_index),
        ("Lipschitz-flat bound", lipschitz_flat_bound),
        ("sphere gap", sphere_gap),
        ("invariance", invariance),
        ("theorem regression", theorem_regression),
        ("isoperimetric chain", isoperimetric_chain),
        ("harmonicity", harmonicity),
        ("Poisson normalization", poisson_normalization),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let (tag, detail) = match res {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name} [{:.1?}]: {detail}", i + 1, t.elapsed());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
