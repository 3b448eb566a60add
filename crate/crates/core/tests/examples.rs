use collector::bounds::{bound_nam1_upper, bound_nam3_upper, Sampling};
use collector::dynamics::{iterate_pairs, step_matrix};
use collector::env::dist::gig_cdf;
use collector::env::{env_moments, GigSampler, ScalarLaw};
use collector::lyapunov::{
    cf_certificate, cf_rate_iid, moebius_apply, nu_cf, nu_cf_dual, nu_direct, nu_gig_diagonal, nu_transfer, nu_via_ratio,
    CfOptions, CfSide, DirectOptions, Norm, RatioOptions, TransferOptions,
};
use collector::meanfield::{mu, mu_first_order};
use collector::optimize::{classify_regime, grid_search, refine, Estimator, GridOptions, Regime};
use collector::{BernSpec, CollectorState, EnvPair, EnvStream, Execution, GigSpec, Mat2, Policy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_917;

fn bern(e: f64, d: f64, eta: f64) -> EnvStream {
    EnvStream::bern(&BernSpec::new(e, d, eta).unwrap(), SEED).unwrap()
}

fn star() -> Policy {
    Policy::new(0.265, 0.284).unwrap()
}

fn combined(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

#[test]
fn direct_estimate_near_reference_optimum() {
    let e = nu_direct(&star(), &bern(0.3, 0.2, 2.0), &DirectOptions::default()).unwrap();
    assert!((e.value - 0.0199).abs() <= 3e-4, "{e:?}");
}

#[test]
fn stochastic_matrices_do_not_grow() {
    let s = EnvStream::constant(EnvPair::new(1.0, 1.0).unwrap(), SEED).unwrap();
    for p in [Policy::new(0.2, 0.7).unwrap(), Policy::new(0.9, 0.1).unwrap()] {
        let d = nu_direct(&p, &s, &DirectOptions::fixed(100_000)).unwrap();
        assert!(d.value.abs() < 1e-4, "{d:?}");
        let opts = TransferOptions {
            norm: Norm::Sum,
            ..TransferOptions::default()
        };
        let t = nu_transfer(&p, &s.atoms().unwrap(), &opts).unwrap();
        assert!(t.estimate.value.abs() < 1e-12);
    }
}

#[test]
fn direct_estimate_ignores_the_start() {
    let s = bern(0.3, 0.2, 2.0);
    let run = |x, y| {
        let o = DirectOptions {
            start: CollectorState { x, y },
            ..DirectOptions::fixed(200_000)
        };
        nu_direct(&star(), &s, &o).unwrap()
    };
    let (a, b) = (run(1.0, 0.0), run(0.0, 1.0));
    let se = combined(a.cert.stderr(), b.cert.stderr());
    assert!((a.value - b.value).abs() < 3.0 * se, "{a:?} {b:?}");
}

#[test]
fn cf_certificate_decays_geometrically() {
    let p = Policy::new(0.5, 0.5).unwrap();
    let h = cf_rate_iid(&p, &ScalarLaw::gamma0(&bern(0.3, 0.2, 2.0)).unwrap()).unwrap();
    let (cert, b50) = cf_certificate(&p, 5.01, 50, CfSide::U, Some(h)).unwrap();
    assert!(b50 < 1e-6, "bound {b50}");
    let bounds: Vec<f64> = (0..60).map(|n| cert.bound(n)).collect();
    assert!(bounds.windows(2).all(|w| w[1] < w[0]));
    let (_, generic) = cf_certificate(&p, 5.01, 50, CfSide::U, None).unwrap();
    assert!(generic >= b50);
}

#[test]
fn cf_branches_meet_on_the_diagonal() {
    let at = |t: f64| cf_certificate(&Policy::new(0.4, t).unwrap(), 5.01, 30, CfSide::U, None).unwrap().1;
    let d = at(0.4);
    assert!((at(0.4 + 1e-9) - d).abs() <= 1e-6 * d);
    assert!((at(0.4 - 1e-9) - d).abs() <= 1e-6 * d);
}

#[test]
fn continued_fractions_agree_with_simulation() {
    let s = bern(0.3, 0.2, 2.0);
    let cf = CfOptions {
        depth: 60,
        replications: 200_000,
        exec: Execution::default(),
    };
    let u = nu_cf(&star(), &s, &cf).unwrap();
    let v = nu_cf_dual(&star(), &s, &cf).unwrap();
    let d = nu_direct(&star(), &s, &DirectOptions::default()).unwrap();
    assert!(u.consistent_with(&d, 3.0), "{u:?} {d:?}");
    assert!(v.consistent_with(&u, 3.0), "{v:?} {u:?}");
}

#[test]
fn ratio_agrees_with_simulation_and_vanishes_without_investment() {
    let s = bern(0.3, 0.2, 2.0);
    let r = nu_via_ratio(&star(), &s, &RatioOptions::default()).unwrap();
    let d = nu_direct(&star(), &s, &DirectOptions::default()).unwrap();
    let se = combined(r.cert.stderr(), d.cert.stderr());
    assert!((r.value - d.value).abs() < 3.0 * se, "{r:?} {d:?}");
    let tiny = nu_via_ratio(&Policy::new(1e-5, 0.5).unwrap(), &s, &RatioOptions::default()).unwrap();
    assert!(tiny.value.abs() < 1e-4, "{tiny:?}");
}

fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// `T_{M_{−1}⋯M_{−(n+1)}}(+∞)` with `w[k]` the draw at time `−(k+1)`.
fn ratio_at_depth(p: &Policy, w: &[EnvPair], n: usize) -> f64 {
    w[..=n]
        .iter()
        .rev()
        .fold(f64::INFINITY, |x, e| moebius_apply(&step_matrix(p, e), x))
}

#[test]
fn stationary_ratio_stabilizes() {
    let p = star();
    let mut s = bern(0.3, 0.2, 2.0);
    let n = 40;
    let windows: Vec<Vec<EnvPair>> = (0..20_000).map(|_| s.take_pairs(2 * n + 1)).collect();
    let short = windows.iter().map(|w| ratio_at_depth(&p, w, n)).collect();
    let long = windows.iter().map(|w| ratio_at_depth(&p, w, 2 * n)).collect();
    let d = ks_two_sample(short, long);
    assert!(d < 0.01, "KS {d}");
}

#[test]
fn moebius_at_infinity_is_the_capital_ratio() {
    let p = star();
    let pairs = bern(0.3, 0.2, 2.0).take_pairs(12);
    let prod = pairs.iter().fold(Mat2::IDENTITY, |acc, e| step_matrix(&p, e) * acc);
    let x = moebius_apply(&prod, f64::INFINITY);
    assert!((x - prod.get(0, 0) / prod.get(1, 0)).abs() <= 1e-12 * x);
    let tr = iterate_pairs(&p, &pairs, CollectorState { x: 1.0, y: 0.0 }).unwrap();
    let n = tr.steps();
    assert!(((tr.log_x[n] - tr.log_y[n]) - x.ln()).abs() < 1e-12);
}

#[test]
fn gig_sampler_matches_its_cdf() {
    let (h, a, b) = (-4.5, 8.0 / 0.69, 8.0 * 0.31 / 0.69);
    let sampler = GigSampler::new(h, a, b).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut xs: Vec<f64> = (0..100_000).map(|_| sampler.sample(&mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for k in (0..xs.len()).step_by(50) {
        let f = gig_cdf(h, a, b, xs[k]).unwrap();
        d = d.max((f - k as f64 / n).abs()).max((f - (k + 1) as f64 / n).abs());
    }
    assert!(d < 0.01, "KS {d}");
}

#[test]
fn gig_monte_carlo_matches_quadrature() {
    let g = GigSpec::new(4.5, 8.0, 8.0).unwrap();
    for lambda in [0.3, 0.5, 0.69] {
        let d = nu_gig_diagonal(&g, lambda, 400_000, SEED, Execution::default()).unwrap();
        assert_eq!(d.agrees(3.0), Some(true), "λ = {lambda}: {d:?}");
    }
}

#[test]
fn enumerated_bounds_match_sampled_bounds() {
    let s = bern(0.3, 0.2, 2.0);
    let ex = Execution::default();
    for f in [bound_nam1_upper, bound_nam3_upper] {
        let exact = f(&star(), &s, Sampling::Exact, ex).unwrap();
        let mc = f(&star(), &s, Sampling::MonteCarlo(400_000), ex).unwrap();
        assert_eq!(exact.stderr, 0.0);
        assert!((exact.value - mc.value).abs() < 4.0 * mc.stderr, "{exact:?} {mc:?}");
    }
}

#[test]
fn regimes_of_reference_laws() {
    let r = classify_regime(&env_moments(&bern(0.95, 0.95, 1.1), None).unwrap());
    assert_eq!(r.regime, Regime::Supercritical);
    assert!(r.delta < 1.0 && r.notes.iter().any(|n| n.contains("corner")));
    let one = EnvStream::constant(EnvPair::new(1.0, 1.0).unwrap(), SEED).unwrap();
    assert_eq!(classify_regime(&env_moments(&one, None).unwrap()).regime, Regime::Critical);
    let sub = classify_regime(&env_moments(&bern(0.3, 0.2, 1.2), None).unwrap());
    assert_eq!(sub.regime, Regime::Subcritical);
}

#[test]
fn subcritical_grid_has_no_growth() {
    let s = bern(0.3, 0.2, 1.2);
    let g = grid_search(&s, &GridOptions::new(&s, 6, 1e-4)).unwrap();
    let (_, best) = g.argmax.unwrap();
    assert!(best.value <= 1e-6, "{best:?}");
}

#[test]
fn refinement_stays_in_the_reference_window() {
    let s = bern(0.3, 0.2, 2.0);
    let est = Estimator::for_stream(&s, 1e-6);
    let r = refine(&s, Policy::new(0.25, 0.25).unwrap(), 0.02, 4, &est).unwrap();
    assert!((0.245..0.285).contains(&r.policy.lambda), "{r:?}");
    assert!((0.264..0.304).contains(&r.policy.theta), "{r:?}");
}

#[test]
fn first_order_growth_is_tangent() {
    let p = Policy::new(0.3, 0.6).unwrap();
    let err = |xi: f64| (mu(&p, 1.0 + xi) - mu_first_order(&p, xi).unwrap()).abs() / xi;
    let errs: Vec<f64> = [1e-2, 1e-3, 1e-4].into_iter().map(err).collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2] && errs[2] < 1e-3, "{errs:?}");
}
