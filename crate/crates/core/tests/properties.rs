use proptest::prelude::*;
use serde_json::json;

use pseudosphere::flatness::{cap_integral, flatness_integrand};
use pseudosphere::geometry::{make_shape, Boundary, ShapeSpec};
use pseudosphere::kuran::{boundary_mean_kuran, kuran_h, kuran_k};
use pseudosphere::quadrature::rules::adaptive_gk_semi_infinite;
use pseudosphere::quadrature::{integrate_boundary, omega, sigma, QuadConfig, Region};
use pseudosphere::Similarity;

fn shape(v: serde_json::Value) -> Boundary {
    let spec: ShapeSpec = serde_json::from_value(v).unwrap();
    make_shape(&spec).unwrap()
}

fn vec_in(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, n)
}

fn dim_and_vecs(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=6).prop_flat_map(move |n| prop::collection::vec(vec_in(n, -3.0, 3.0), k))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kuran_vanishes_at_origin(v in dim_and_vecs(1)) {
        let alpha = &v[0];
        prop_assume!(norm(alpha) > 1e-3);
        let k = kuran_k(alpha, &vec![0.0; alpha.len()]).unwrap();
        prop_assert!(k.abs() <= 1e-13, "k = {k}");
    }

    #[test]
    fn integrand_decomposition(v in dim_and_vecs(3)) {
        // 2<α-x, α-x0>/|x-α|^n = |x-α|^{2-n} + (|α-x0|² - |x-x0|²)/|x-α|^n
        let (alpha, x, x0) = (&v[0], &v[1], &v[2]);
        let n = alpha.len() as i32;
        let d: Vec<f64> = alpha.iter().zip(x).map(|(a, b)| a - b).collect();
        let dn = norm(&d);
        prop_assume!(dn > 1e-2);
        let ax0 = alpha.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let xx0 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let lhs = 2.0 * flatness_integrand(alpha, x, x0).unwrap();
        let rhs = dn.powi(2 - n) + (ax0 - xx0) / dn.powi(n);
        let scale = dn.powi(2 - n) + (ax0.abs() + xx0.abs()) / dn.powi(n);
        prop_assert!((lhs - rhs).abs() <= 1e-13 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn kuran_h_is_harmonic(v in dim_and_vecs(2), d in 0.5f64..2.0) {
        let alpha = &v[0];
        prop_assume!(norm(alpha) > 0.5);
        let u = &v[1];
        prop_assume!(norm(u) > 1e-2);
        let x: Vec<f64> = alpha.iter().zip(u).map(|(a, b)| a + d * b / norm(u)).collect();
        let lap = |h: f64| {
            let c = kuran_h(alpha, &x).unwrap();
            let mut y = x.clone();
            let mut s = 0.0;
            for i in 0..x.len() {
                y[i] = x[i] + h;
                s += kuran_h(alpha, &y).unwrap();
                y[i] = x[i] - h;
                s += kuran_h(alpha, &y).unwrap();
                y[i] = x[i];
                s -= 2.0 * c;
            }
            s / (h * h)
        };
        let (l1, l2) = (lap(0.02), lap(0.01));
        let order = (l1.abs() / l2.abs()).log2();
        prop_assert!((order - 2.0).abs() <= 0.3, "order {order}");
    }

    #[test]
    fn poisson_kernel_is_normalised(n in 2usize..=6, t in 1e-3f64..1e3) {
        // ∫_{R^{n-1}} t/(|y|² + t²)^{n/2} dy = n ω_n / 2 for every t > 0
        let k = n as i32;
        let i = adaptive_gk_semi_infinite(
            |s| t * s.powi(k - 2) * (s * s + t * t).powf(-(n as f64) / 2.0),
            0.0,
            1e-15,
            1e-13,
        );
        let v = 2.0 / (n as f64 * omega(n)) * sigma(n - 1) * i.value;
        prop_assert!((v - 1.0).abs() <= 1e-8, "n = {n}, t = {t}: {v}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flat_cap_splits_into_closed_forms(t in 1e-4f64..0.2, r in 0.2f64..3.0, rr in 0.05f64..1.0) {
        // on x_n = 0 with α = t e_n, x0 = -r e_n: ⟨α - x, α - x0⟩ = t (t + r),
        // so the cap integral is (t + r) times the Poisson mass of the cap
        let b = shape(json!({"kind": "halfspace_cap", "n": 2, "bounding_radius": 4.0}));
        let cfg = QuadConfig::default();
        let v = cap_integral(&b, &[0.0, 0.0], rr, &[0.0, t], &[0.0, -r], &cfg).unwrap().value;
        let i1 = t * 2.0 * (rr / t).atan();
        let i2 = r * 2.0 * (rr / t).atan();
        prop_assert!((v - (i1 + i2)).abs() <= 1e-9 * (i1 + i2), "{v} vs {}", i1 + i2);
    }

    #[test]
    fn mean_kuran_is_similarity_invariant(
        angle in 0.0f64..std::f64::consts::TAU, log_s in -2.0f64..2.0, sx in -4.0f64..4.0, sy in -4.0f64..4.0,
        phi in 0.0f64..std::f64::consts::TAU, far in 1.05f64..3.0,
    ) {
        let b = shape(json!({"kind": "perturbed_circle", "radius": 1.0, "amplitude": 0.1, "k": 3}));
        let x0 = [0.1, -0.05];
        let alpha_g = [far * 1.1 * phi.cos(), far * 1.1 * phi.sin()];
        let alpha = [alpha_g[0] - x0[0], alpha_g[1] - x0[1]];
        let cfg = QuadConfig::default();
        let m0 = boundary_mean_kuran(&b, &x0, &alpha, &cfg).unwrap().value;
        let s = 2f64.powf(log_s);
        let sim = Similarity::planar(angle, s, [sx, sy]);
        let bt = b.transformed(&sim).unwrap();
        let at: Vec<f64> = sim.rotate(&alpha).iter().map(|a| s * a).collect();
        let m1 = boundary_mean_kuran(&bt, &sim.apply(&x0), &at, &cfg).unwrap().value;
        prop_assert!((m1 - m0).abs() <= 1e-9 * m0.abs().max(1e-3), "{m0} vs {m1}");
    }

    #[test]
    fn clipped_parts_sum_to_whole(cx in -1.5f64..1.5, cy in -1.5f64..1.5, rr in 0.05f64..2.5) {
        let b = shape(json!({"kind": "ellipse", "semi_axes": [1.5, 1.0], "angle": 0.2}));
        let cfg = QuadConfig::default();
        let f = |x: &[f64]| 1.0 + x[0] * x[0] - 0.5 * x[1];
        let c = [cx, cy];
        let whole = integrate_boundary(&b, f, None, &cfg).unwrap().value;
        let inside = integrate_boundary(&b, f, Some(&Region::ball(&c, rr)), &cfg).unwrap().value;
        let outside = integrate_boundary(&b, f, Some(&Region::outside(&c, rr)), &cfg).unwrap().value;
        prop_assert!((inside + outside - whole).abs() <= 1e-9 * whole.abs(), "{inside} + {outside} vs {whole}");
    }
}

#[test]
fn flat_cap_split_in_three_dimensions() {
    // Poisson mass of a disc of radius R: 2π (1 - t / sqrt(R² + t²))
    let b = shape(json!({"kind": "halfspace_cap", "n": 3, "bounding_radius": 4.0}));
    let cfg = QuadConfig::default();
    for (t, r, rr) in [(1e-3, 1.0, 0.25), (0.05, 0.5, 0.5), (0.01, 2.0, 0.1)] {
        let v = cap_integral(&b, &[0.0; 3], rr, &[0.0, 0.0, t], &[0.0, 0.0, -r], &cfg)
            .unwrap()
            .value;
        let exact = (t + r) * 2.0 * std::f64::consts::PI * (1.0 - t / (rr * rr + t * t).sqrt());
        assert!((v - exact).abs() <= 1e-7 * exact, "{v} vs {exact}");
    }
}
