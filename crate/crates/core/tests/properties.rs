use collector::bounds::{bound_art_lower, bound_nam1_upper, bound_nam3_upper, bounds_dual, Sampling};
use collector::dynamics::{
    ar_coefficients, ar_coefficients_y, companion, dual_iterate_pairs, factor_matrices, iterate_pairs, step_matrix,
};
use collector::lyapunov::{birkhoff_tau, cf_paths, hilbert_distance, moebius_apply, CfSide, ProjPoint};
use collector::meanfield::{mean_matrix, mean_trajectory, mu, mu_general, MeanSpec};
use collector::optimize::kelly_1d;
use collector::env::ScalarLaw;
use collector::{BernSpec, CollectorState, EnvPair, EnvStream, Execution, Mat2, Policy};
use proptest::prelude::*;

fn interior() -> impl Strategy<Value = Policy> {
    (0.01f64..0.99, 0.01f64..0.99).prop_map(|(lambda, theta)| Policy { lambda, theta })
}

fn pair() -> impl Strategy<Value = EnvPair> {
    (0.1f64..3.0, 0.1f64..3.0).prop_map(|(epsilon, delta)| EnvPair { epsilon, delta })
}

fn pairs(n: usize) -> impl Strategy<Value = Vec<EnvPair>> {
    prop::collection::vec(pair(), n)
}

fn positive_matrix() -> impl Strategy<Value = Mat2> {
    prop::array::uniform4(0.05f64..5.0).prop_map(|a| Mat2::new(a[0], a[1], a[2], a[3]))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn determinant_identity(p in interior(), e in pair()) {
        let m = step_matrix(&p, &e);
        let scale = (m.get(0, 0) * m.get(1, 1)).max(1.0);
        prop_assert!((m.det() - (1.0 - p.lambda) * (1.0 - p.theta)).abs() <= 1e-14 * scale);
    }

    #[test]
    fn factorization_reproduces_step(p in interior(), e in pair()) {
        let (sell, buy) = factor_matrices(&p, &e);
        let m = step_matrix(&p, &e);
        prop_assert!((sell * buy).max_abs_diff(&m) <= 1e-14 * m.get(0, 0).max(1.0));
    }

    #[test]
    fn entries_positive_inside(p in interior(), e in pair()) {
        prop_assert!(step_matrix(&p, &e).is_positive());
    }

    #[test]
    fn entries_nonnegative_on_edges(l in 0.0f64..=1.0, e in pair(), edge in 0usize..4) {
        let p = match edge {
            0 => Policy { lambda: 0.0, theta: l.max(0.01) },
            1 => Policy { lambda: l, theta: 1.0 },
            2 => Policy { lambda: 1.0, theta: l },
            _ => Policy { lambda: l.max(0.01), theta: 0.0 },
        };
        let m = step_matrix(&p, &e);
        prop_assert!(m.is_nonnegative());
        if edge == 2 {
            // Full investment keeps entries positive but collapses rank.
            prop_assert!(m.det().abs() < 1e-14);
        } else {
            prop_assert!(!m.is_positive());
        }
    }

    #[test]
    fn dual_identity(p in interior(), ps in pairs(201), x0 in 0.0f64..2.0, y0 in 0.1f64..2.0) {
        let s0 = CollectorState { x: x0, y: y0 };
        let prim = iterate_pairs(&p, &ps, s0).unwrap();
        let dual = dual_iterate_pairs(&p, &ps, s0).unwrap();
        for k in 0..200 {
            if x0 > 0.0 || k > 0 {
                prop_assert!((dual.log_x[k] - (1.0 - p.lambda).ln() - prim.log_x[k]).abs() < 1e-10);
            }
            prop_assert!((dual.log_y[k] - prim.log_y[k + 1] + (1.0 - p.theta).ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn ar_recursion_reproduces_capital(p in interior(), ps in pairs(120)) {
        let s0 = CollectorState { x: 1.0, y: 1.0 };
        let tr = iterate_pairs(&p, &ps[1..], s0).unwrap();
        // X_{n+1} = p_n X_n + q_n X_{n−1} with ps[0] as the pre-sample for d.
        for n in 1..tr.steps() {
            let (cur, prev) = (ps[n + 1], ps[n]);
            let (pn, qn) = ar_coefficients(&p, cur.gamma(), cur.delta / prev.delta);
            let lhs = tr.log_x[n + 1];
            let rhs = (pn * tr.log_x[n].exp() + qn * tr.log_x[n - 1].exp()).ln();
            prop_assert!((lhs - rhs).abs() < 1e-9, "step {n}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn ar_recursion_reproduces_collection(p in interior(), ps in pairs(120)) {
        let s0 = CollectorState { x: 1.0, y: 1.0 };
        let tr = iterate_pairs(&p, &ps, s0).unwrap();
        // Y_{n+1} = r_n Y_n + s_n Y_{n−1}, ζ_n = ε_{n+1}δ_n, e_n = ε_{n+1}/ε_n.
        for n in 1..tr.steps() - 1 {
            let (r, s) = ar_coefficients_y(&p, ps[n + 1].epsilon * ps[n].delta, ps[n + 1].epsilon / ps[n].epsilon).unwrap();
            let lhs = tr.log_y[n + 2];
            let rhs = (r * tr.log_y[n + 1].exp() + s * tr.log_y[n].exp()).ln();
            prop_assert!((lhs - rhs).abs() < 1e-9, "step {n}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn companion_product_matches_recursion(p in interior(), ps in pairs(30)) {
        // [X_{n+1}, X_n]ᵀ = C_n [X_n, X_{n−1}]ᵀ.
        let tr = iterate_pairs(&p, &ps[1..], CollectorState { x: 1.0, y: 0.5 }).unwrap();
        let x: Vec<f64> = tr.log_x.iter().map(|v| v.exp()).collect();
        let mut v = [x[1], x[0]];
        for n in 1..tr.steps() {
            let (pn, qn) = ar_coefficients(&p, ps[n + 1].gamma(), ps[n + 1].delta / ps[n].delta);
            v = companion(pn, qn).apply(v);
            prop_assert!(rel(v[0], x[n + 1]) < 1e-10);
        }
    }

    #[test]
    fn art_accounting(p in interior(), ps in pairs(20), x0 in 0.1f64..2.0, y0 in 0.1f64..2.0) {
        let tr = iterate_pairs(&p, &ps, CollectorState { x: x0, y: y0 }).unwrap();
        let (l, t) = (p.lambda, p.theta);
        let n = ps.len() - 1;
        let mut sum = (1.0 - t).powi(n as i32 + 1) * y0;
        for (k, e) in ps.iter().enumerate() {
            sum += l * (1.0 - t).powi((n + 1 - k) as i32) * e.epsilon * tr.log_x[k].exp();
        }
        prop_assert!(rel(tr.log_y[n + 1].exp(), sum) < 1e-10);
    }

    #[test]
    fn log_trajectory_matches_direct_product(p in interior(), ps in pairs(10)) {
        let s0 = CollectorState { x: 0.7, y: 1.3 };
        let tr = iterate_pairs(&p, &ps, s0).unwrap();
        let prod = ps.iter().fold(Mat2::IDENTITY, |acc, e| step_matrix(&p, e) * acc);
        let v = prod.apply(s0.as_vec());
        let u = tr.unnormalized();
        prop_assert!(rel(u[0], v[0]) < 1e-12 && rel(u[1], v[1]) < 1e-12);
    }

    #[test]
    fn mu_symmetric_and_sandwiched(p in interior(), g in 0.05f64..5.0) {
        let m = mu(&p, g);
        prop_assert!((m - mu(&p.swapped(), g)).abs() <= 1e-14 * m.max(1.0));
        if (g - 1.0).abs() > 1e-9 {
            prop_assert!(g.min(1.0) < m && m < g.max(1.0));
        }
    }

    #[test]
    fn mu_is_top_eigenvalue(p in interior(), a in 0.1f64..3.0, b in 0.1f64..3.0) {
        let ms = MeanSpec::independent(a, b).unwrap();
        let m = mean_matrix(&p, &ms);
        prop_assert!(rel(mu(&p, a * b), m.top_eigenvalue()) < 1e-12);
        prop_assert!(rel(mu_general(&p, a * b, a * b), m.top_eigenvalue()) < 1e-12);
    }

    #[test]
    fn gamma_one_conservation(p in interior(), a in 0.2f64..5.0, u0 in 0.0f64..3.0, v0 in 0.01f64..3.0) {
        let ms = MeanSpec::independent(a, 1.0 / a).unwrap();
        let tr = mean_trajectory(&p, &ms, u0, v0, 100).unwrap();
        let c0 = a * u0 + v0;
        for (u, v) in tr {
            prop_assert!((a * u + v - c0).abs() <= 1e-12 * c0);
        }
    }

    #[test]
    fn moebius_composition(a in positive_matrix(), b in positive_matrix(), x in 0.0f64..50.0) {
        let lhs = moebius_apply(&a, moebius_apply(&b, x));
        let rhs = moebius_apply(&(a * b), x);
        prop_assert!(rel(lhs, rhs) < 1e-12);
        let inf = moebius_apply(&a, moebius_apply(&b, f64::INFINITY));
        prop_assert!(rel(inf, moebius_apply(&(a * b), f64::INFINITY)) < 1e-12);
    }

    #[test]
    fn birkhoff_contracts_hilbert_metric(a in positive_matrix(), x in (0.01f64..5.0, 0.01f64..5.0), y in (0.01f64..5.0, 0.01f64..5.0)) {
        let tau = birkhoff_tau(&a).unwrap();
        prop_assert!((0.0..1.0).contains(&tau));
        let px = ProjPoint::new(x.0, x.1).unwrap();
        let py = ProjPoint::new(y.0, y.1).unwrap();
        let before = hilbert_distance(&px, &py);
        let after = hilbert_distance(&px.apply(&a), &py.apply(&a));
        prop_assert!(after <= tau * before + 1e-12);
    }

    #[test]
    fn cf_paths_decrease(p in interior(), ps in pairs(40)) {
        for side in [CfSide::U, CfSide::V] {
            let u = cf_paths(&p, &ps, side).unwrap();
            prop_assert!(u.iter().all(|&x| x > 0.0));
            for w in u.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "{side:?}: {} then {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn kelly_value_concave(xs in prop::collection::vec(0.1f64..3.0, 2..6), l in 0.02f64..0.98) {
        let w = 1.0 / xs.len() as f64;
        let law = ScalarLaw::Atoms(xs.iter().map(|&x| (x, w)).collect());
        let h = 0.01;
        let second = kelly_1d(&law, l + h).unwrap() - 2.0 * kelly_1d(&law, l).unwrap() + kelly_1d(&law, l - h).unwrap();
        prop_assert!(second <= 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bounds_sandwich_art_below_nam(p in interior(), e in 0.1f64..0.95, d in 0.1f64..0.95, eta in 1.05f64..3.0) {
        let s = EnvStream::bern(&BernSpec::new(e, d, eta).unwrap(), 1).unwrap();
        let ex = Execution::Sequential;
        let lo = bound_art_lower(&p, &s, Sampling::Exact, ex).unwrap().value;
        prop_assert!(lo <= bound_nam1_upper(&p, &s, Sampling::Exact, ex).unwrap().value + 1e-12);
        prop_assert!(lo <= bound_nam3_upper(&p, &s, Sampling::Exact, ex).unwrap().value + 1e-12);
        let du = bounds_dual(&p, &s, Sampling::Exact, ex).unwrap();
        prop_assert!(du.lower_art.value <= du.upper_nam1.value + 1e-12);
        prop_assert!(du.lower_art.value <= du.upper_nam3.value + 1e-12);
    }

    #[test]
    fn symmetric_spec_dual_bounds_match(l in 0.05f64..0.95, a in 0.1f64..0.95, eta in 1.05f64..3.0) {
        let s = EnvStream::bern(&BernSpec::new(a, a, eta).unwrap(), 1).unwrap();
        let p = Policy { lambda: l, theta: l };
        let ex = Execution::Sequential;
        let du = bounds_dual(&p, &s, Sampling::Exact, ex).unwrap();
        prop_assert!((du.lower_art.value - bound_art_lower(&p, &s, Sampling::Exact, ex).unwrap().value).abs() < 1e-12);
        prop_assert!((du.upper_nam1.value - bound_nam1_upper(&p, &s, Sampling::Exact, ex).unwrap().value).abs() < 1e-12);
        prop_assert!((du.upper_nam3.value - bound_nam3_upper(&p, &s, Sampling::Exact, ex).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn stream_replay_is_deterministic(seed in any::<u64>()) {
        let spec = BernSpec::new(0.3, 0.2, 2.0).unwrap();
        let a = EnvStream::bern(&spec, seed).unwrap().take_pairs(200);
        let b = EnvStream::bern(&spec, seed).unwrap().take_pairs(200);
        prop_assert_eq!(a, b);
    }
}
