//! Golden-value checks for the collector model.
//!
//! [`run`] evaluates numbered criteria and records one line per check.
//! `Scope::Golden` covers the published reference values; `Scope::Full` adds
//! property suites and cross-method agreement.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use collector::bounds::{bound_logplus_upper, bounds_report, Sampling};
use collector::dynamics::{dual_iterate_pairs, factor_matrices, iterate_pairs, step_matrix};
use collector::env::{env_moments, MarkovSpec};
use collector::lyapunov::{
    cf_paths, nu_boundary, nu_cf, nu_cf_dual, nu_direct, nu_gig_diagonal, nu_transfer, nu_via_ratio, CfOptions,
    CfSide, DirectOptions, RatioOptions, TransferOptions,
};
use collector::meanfield::{dmu_dlambda, dmu_dtheta, mean_trajectory, mu, MeanSpec};
use collector::optimize::{grid_search, kelly_boundary_max, kelly_effect_test, GridOptions, KellyCase, PolicyGrid};
use collector::{BernSpec, CollectorState, EnvPair, EnvStream, Execution, GigSpec, LyapEstimate, Policy};

pub const SEED: u64 = 0x5eed_2024;

/// Reference values.
pub mod golden {
    pub const E1_CORNER_VALUE: f64 = 0.044314;
    pub const E1_CORNER_DELTA: f64 = 0.962089;
    pub const E1_INTERIOR_LAMBDA: f64 = 0.3305;
    pub const E1_INTERIOR_VALUE: f64 = 0.016326;
    pub const BERN_EDGE_LAMBDA: f64 = 0.132304;
    pub const BERN_EDGE_VALUE: f64 = 0.0160933;
    pub const STAR: (f64, f64) = (0.265, 0.284);
    pub const VARTHETA: f64 = 0.6088577;
    pub const CERT_20: f64 = 0.00003004159;
    pub const NU_TAIL: f64 = 0.019919081;
    pub const LAMBDA_WINDOW: (f64, f64) = (0.245, 0.285);
    pub const THETA_WINDOW: (f64, f64) = (0.264, 0.304);
    pub const GIG_DIAGONAL: f64 = 0.062518;
    pub const GIG_EDGE: f64 = 0.061395;
}

#[derive(Clone, Debug)]
pub struct Check {
    pub id: String,
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "[PASS]" } else { "[FAIL]" };
        write!(f, "{tag} {:<6} {}: {}", self.id, self.label, self.detail)
    }
}

/// Collected checks; optionally echoes each line to stdout as it is recorded.
#[derive(Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
    echo: bool,
}

impl Report {
    pub fn new(echo: bool) -> Self {
        Report {
            checks: Vec::new(),
            echo,
        }
    }

    pub fn check(&mut self, id: &str, label: &str, passed: bool, detail: String) {
        let c = Check {
            id: id.to_string(),
            label: label.to_string(),
            passed,
            detail,
        };
        if self.echo {
            println!("{c}");
        }
        self.checks.push(c);
    }

    /// `|measured − expected| ≤ tol`.
    pub fn close(&mut self, id: &str, label: &str, measured: f64, expected: f64, tol: f64) {
        let err = (measured - expected).abs();
        let detail = format!("measured {measured:.10} expected {expected} |diff| {err:.3e} tol {tol:.1e}");
        self.check(id, label, err <= tol, detail);
    }

    pub fn at_most(&mut self, id: &str, label: &str, measured: f64, limit: f64) {
        let detail = format!("measured {measured:.6e} limit {limit:.6e}");
        self.check(id, label, measured <= limit, detail);
    }

    pub fn error(&mut self, id: &str, label: &str, e: impl fmt::Display) {
        self.check(id, label, false, format!("error: {e}"));
    }

    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn passed(&self) -> usize {
        self.checks.len() - self.failed()
    }

    fn runtime(&mut self, id: &str, start: Instant, limit_s: f64) {
        let t = start.elapsed().as_secs_f64();
        self.check(id, "runtime", t < limit_s, format!("{t:.2} s, limit {limit_s} s"));
    }
}

macro_rules! attempt {
    ($rep:expr, $id:expr, $label:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => {
                $rep.error($id, $label, err);
                return None;
            }
        }
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    /// Published reference values only (criteria 1–7).
    Golden,
    /// Everything, including property suites and cross-method agreement.
    Full,
}

pub fn bern(e: f64, d: f64, eta: f64) -> EnvStream {
    EnvStream::bern(&BernSpec::new(e, d, eta).expect("valid spec"), SEED).expect("valid stream")
}

fn star() -> Policy {
    Policy {
        lambda: golden::STAR.0,
        theta: golden::STAR.1,
    }
}

pub fn run(scope: Scope, exec: Execution, echo: bool) -> Report {
    let mut r = Report::new(echo);
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);
    criterion_4(&mut r, exec);
    criterion_5(&mut r);
    let grid = criterion_6(&mut r, exec);
    criterion_7(&mut r, exec);
    if scope == Scope::Full {
        criterion_8(&mut r, exec, grid.as_ref());
        criterion_9(&mut r, exec);
    }
    r
}

/// Kelly boundary values for the two-point examples.
pub fn criterion_1(r: &mut Report) -> Option<()> {
    let t0 = Instant::now();
    let s = bern(0.95, 0.95, 1.1);
    let m = attempt!(r, "C1.1", "moments BERN(0.95,0.95;1.1)", env_moments(&s, None));
    r.close("C1.1", "Δ = E 1/γ_0, BERN(0.95,0.95;1.1)", m.mean_inv_gamma, golden::E1_CORNER_DELTA, 5e-7);
    let b = attempt!(r, "C1.2", "boundary max BERN(0.95,0.95;1.1)", kelly_boundary_max(&s));
    r.check(
        "C1.2",
        "λ* = 1 on θ = 1, BERN(0.95,0.95;1.1)",
        b.theta_one.case == KellyCase::Full && b.theta_one.lambda_star == 1.0,
        format!("λ* = {} ({:?})", b.theta_one.lambda_star, b.theta_one.case),
    );
    r.close("C1.3", "ν(1,1) = E ln γ_0, BERN(0.95,0.95;1.1)", b.theta_one.value, golden::E1_CORNER_VALUE, 1e-5);
    let s = bern(0.75, 0.75, 1.3);
    let b = attempt!(r, "C1.4", "boundary max BERN(0.75,0.75;1.3)", kelly_boundary_max(&s));
    r.close("C1.4", "λ* on θ = 1, BERN(0.75,0.75;1.3)", b.theta_one.lambda_star, golden::E1_INTERIOR_LAMBDA, 5e-4);
    r.close("C1.5", "ν(λ*,1), BERN(0.75,0.75;1.3)", b.theta_one.value, golden::E1_INTERIOR_VALUE, 1e-5);
    r.runtime("C1.6", t0, 1.0);
    Some(())
}

/// Speculator-edge maximum for BERN(0.3,0.2;2).
pub fn criterion_2(r: &mut Report) -> Option<()> {
    let t0 = Instant::now();
    let s = bern(0.3, 0.2, 2.0);
    let b = attempt!(r, "C2.1", "boundary max", kelly_boundary_max(&s));
    r.close("C2.1", "λ* on θ = 1", b.theta_one.lambda_star, golden::BERN_EDGE_LAMBDA, 1e-6);
    r.close("C2.2", "max over θ = 1", b.theta_one.value, golden::BERN_EDGE_VALUE, 1e-6);
    let p = Policy::new(golden::BERN_EDGE_LAMBDA, 1.0).ok()?;
    let e = attempt!(r, "C2.3", "ν(0.132304, 1)", nu_boundary(&p, &s));
    r.close("C2.3", "ν(0.132304, 1) closed form", e.value, golden::BERN_EDGE_VALUE, 1e-6);
    r.runtime("C2.4", t0, 1.0);
    Some(())
}

fn transfer_at(p: &Policy, s: &EnvStream, n_iter: usize) -> collector::Result<collector::lyapunov::TransferReport> {
    let atoms = s.atoms().ok_or(collector::Error::NeedsFiniteSupport)?;
    nu_transfer(
        p,
        &atoms,
        &TransferOptions {
            n_iter,
            ..TransferOptions::default()
        },
    )
}

/// Transfer-operator contraction constant and 20-step certificate.
pub fn criterion_3(r: &mut Report) -> Option<()> {
    let t0 = Instant::now();
    let s = bern(0.3, 0.2, 2.0);
    let t = attempt!(r, "C3.1", "transfer operator, 20 steps", transfer_at(&star(), &s, 20));
    r.close("C3.1", "ϑ at (0.265, 0.284)", t.vartheta, golden::VARTHETA, 1e-7);
    r.at_most("C3.2", "20-step contraction bound", t.contraction_bound, golden::CERT_20 + 1e-9);
    r.check(
        "C3.3",
        "interpolation error (reported)",
        true,
        format!("{:.3e} (exact depth {})", t.interp_error, t.exact_depth),
    );
    r.runtime("C3.4", t0, 60.0);
    Some(())
}

/// Converged exponent at the reported optimum.
pub fn criterion_4(r: &mut Report, exec: Execution) -> Option<()> {
    let s = bern(0.3, 0.2, 2.0);
    let t = attempt!(r, "C4.1", "transfer operator, 60 steps", transfer_at(&star(), &s, 60));
    r.close("C4.1", "transfer ν at (0.265, 0.284)", t.estimate.value, golden::NU_TAIL, 1e-6);
    let opts = DirectOptions {
        exec,
        ..DirectOptions::default()
    };
    let d = attempt!(r, "C4.2", "direct ν", nu_direct(&star(), &s, &opts));
    let se = d.cert.stderr();
    let diff = (d.value - golden::NU_TAIL).abs();
    r.check(
        "C4.2",
        "direct ν within 3 stderr",
        diff <= 3.0 * se,
        format!("measured {:.6} ± {se:.2e} ({} steps) |diff| {diff:.2e}", d.value, d.iterations),
    );
    Some(())
}

/// Certified interior optimum beats the best boundary policy.
pub fn criterion_5(r: &mut Report) -> Option<()> {
    let s = bern(0.3, 0.2, 2.0);
    let t = attempt!(r, "C5.1", "transfer operator", transfer_at(&star(), &s, 20));
    let b = attempt!(r, "C5.1", "boundary max", kelly_boundary_max(&s));
    let k = kelly_effect_test(&t.estimate, b.value, 3.0);
    r.check(
        "C5.1",
        "KELLY_EFFECT with margin > 3e-3",
        k.is_effect() && k.margin() > 3e-3,
        format!(
            "interior {:.8} − cert {:.3e} vs boundary {:.7}: {:?}",
            t.estimate.value,
            t.estimate.cert.value(),
            b.value,
            k
        ),
    );
    Some(())
}

/// 50×50 sweep places the argmax inside the reported window.
pub fn criterion_6(r: &mut Report, exec: Execution) -> Option<PolicyGrid> {
    let t0 = Instant::now();
    let s = bern(0.3, 0.2, 2.0);
    let mut opts = GridOptions::new(&s, 50, 1e-3);
    opts.exec = exec;
    let g = attempt!(r, "C6.1", "50×50 sweep", grid_search(&s, &opts));
    let flagged = g.flagged().count();
    r.check("C6.1", "all cells evaluated", flagged == 0, format!("{flagged} flagged cells"));
    match g.argmax {
        Some((p, e)) => {
            let (l0, l1) = golden::LAMBDA_WINDOW;
            let (t0_, t1) = golden::THETA_WINDOW;
            let inside = (l0..=l1).contains(&p.lambda) && (t0_..=t1).contains(&p.theta);
            r.check(
                "C6.2",
                "argmax in λ∈[0.245,0.285], θ∈[0.264,0.304]",
                inside,
                format!("argmax ({:.4}, {:.4}) ν = {:.7}", p.lambda, p.theta, e.value),
            );
        }
        None => r.check("C6.2", "argmax exists", false, "no valid cell".into()),
    }
    let corner = g.cell(50, 50).estimate.map_or(f64::NAN, |e| e.value);
    r.check("C6.3", "negative region near (1,1)", corner < 0.0, format!("ν at the corner cell = {corner:.5}"));
    r.runtime("C6.4", t0, 1800.0);
    Some(g)
}

/// Gamma margins with equal rates on the diagonal.
pub fn criterion_7(r: &mut Report, exec: Execution) -> Option<()> {
    let t0 = Instant::now();
    let g = GigSpec::new(4.5, 8.0, 8.0).ok()?;
    let d = attempt!(r, "C7.1", "diagonal formula", nu_gig_diagonal(&g, 0.69, 2_000_000, SEED, exec));
    let q = d.quadrature?;
    r.close("C7.1", "ν(0.69,0.69) by quadrature", q.value, golden::GIG_DIAGONAL, 5e-4);
    let se = d.mc.cert.stderr();
    let diff = (d.mc.value - golden::GIG_DIAGONAL).abs();
    r.check(
        "C7.2",
        "ν(0.69,0.69) by Monte Carlo within 3 stderr",
        diff <= 3.0 * se,
        format!("measured {:.6} ± {se:.2e} |diff| {diff:.2e}", d.mc.value),
    );
    let s = EnvStream::gamma(&g, SEED).ok()?;
    let b = attempt!(r, "C7.3", "boundary max", kelly_boundary_max(&s));
    r.close("C7.3", "boundary maximum", b.value, golden::GIG_EDGE, 5e-4);
    let k = kelly_effect_test(&q, b.value, 3.0);
    r.check(
        "C7.4",
        "KELLY_EFFECT margin positive",
        k.is_effect(),
        format!("interior {:.7} vs boundary {:.7} at λ* = {:.5}: {:?}", q.value, b.value, b.theta_one.lambda_star, k),
    );
    let mk = kelly_effect_test(&d.mc, b.value, 3.0);
    r.check(
        "C7.5",
        "Monte Carlo alone also decisive",
        mk.is_effect(),
        format!("stderr {se:.2e} vs gap {:.3e}: {mk:?}", d.mc.value - b.value),
    );
    r.runtime("C7.6", t0, 600.0);
    Some(())
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ tag)
}

fn random_policy(g: &mut ChaCha8Rng) -> Policy {
    Policy {
        lambda: g.random_range(0.01..0.99),
        theta: g.random_range(0.01..0.99),
    }
}

fn random_pair(g: &mut ChaCha8Rng) -> EnvPair {
    EnvPair {
        epsilon: g.random_range(0.1..3.0),
        delta: g.random_range(0.1..3.0),
    }
}

/// Property suites on deterministic samples.
pub fn criterion_8(r: &mut Report, exec: Execution, grid: Option<&PolicyGrid>) -> Option<()> {
    // Determinant and factorization.
    let mut g = rng(1);
    let (mut det_err, mut fac_err) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (p, e) = (random_policy(&mut g), random_pair(&mut g));
        let m = step_matrix(&p, &e);
        let scale = (m.get(0, 0) * m.get(1, 1)).abs().max(1.0);
        det_err = det_err.max((m.det() - (1.0 - p.lambda) * (1.0 - p.theta)).abs() / scale);
        let (sell, buy) = factor_matrices(&p, &e);
        fac_err = fac_err.max((sell * buy).max_abs_diff(&m) / scale);
    }
    r.at_most("C8.1", "det M = (1−λ)(1−θ), 1000 draws", det_err, 1e-14);
    r.at_most("C8.2", "sell·buy = M, 1000 draws", fac_err, 1e-14);

    // Dual representation along 1000 steps.
    let s = bern(0.3, 0.2, 2.0);
    let mut worst = 0.0f64;
    for (k, &(l, t)) in [(0.265, 0.284), (0.7, 0.2), (0.1, 0.9)].iter().enumerate() {
        let p = Policy { lambda: l, theta: t };
        let pairs = s.fork(k as u64).take_pairs(1001);
        let s0 = CollectorState { x: 1.0, y: 0.5 };
        let prim = attempt!(r, "C8.3", "primal run", iterate_pairs(&p, &pairs, s0));
        let dual = attempt!(r, "C8.3", "dual run", dual_iterate_pairs(&p, &pairs, s0));
        for i in 0..1000 {
            let ex = (dual.log_x[i] - ((1.0 - l).ln() + prim.log_x[i])).abs();
            let ey = (dual.log_y[i] - (prim.log_y[i + 1] - (1.0 - t).ln())).abs();
            worst = worst.max(ex).max(ey);
        }
    }
    r.at_most("C8.3", "dual identity, relative error over 1000 steps", worst, 1e-10);

    // Mean-field rate.
    let mut g = rng(2);
    let (mut sym, mut sandwich_ok, mut grad_ok) = (0.0f64, true, true);
    let mut grad_err = 0.0f64;
    for _ in 0..500 {
        let p = random_policy(&mut g);
        let gamma = g.random_range(0.2..3.0);
        let m = mu(&p, gamma);
        sym = sym.max((m - mu(&p.swapped(), gamma)).abs());
        let (lo, hi) = (gamma.min(1.0), gamma.max(1.0));
        sandwich_ok &= lo < m && m < hi;
        let h = 1e-6;
        let fd_l = (mu(&Policy { lambda: p.lambda + h, ..p }, gamma) - mu(&Policy { lambda: p.lambda - h, ..p }, gamma)) / (2.0 * h);
        let fd_t = (mu(&Policy { theta: p.theta + h, ..p }, gamma) - mu(&Policy { theta: p.theta - h, ..p }, gamma)) / (2.0 * h);
        let (dl, dt) = (dmu_dlambda(&p, gamma), dmu_dtheta(&p, gamma));
        let want = (gamma - 1.0).signum();
        grad_ok &= dl.signum() == want && dt.signum() == want && fd_l.signum() == want && fd_t.signum() == want;
        grad_err = grad_err.max((dl - fd_l).abs() / dl.abs().max(1e-3)).max((dt - fd_t).abs() / dt.abs().max(1e-3));
    }
    r.at_most("C8.4", "μ(λ,θ) = μ(θ,λ)", sym, 1e-14);
    r.check("C8.5", "min(1,γ) < μ < max(1,γ) inside", sandwich_ok, "500 random (λ,θ,γ), γ ≠ 1".into());
    r.check(
        "C8.6",
        "gradient signs = sign(γ−1), closed form vs differences",
        grad_ok && grad_err < 1e-6,
        format!("max relative derivative gap {grad_err:.2e}"),
    );

    // Conservation at γ = 1.
    let mut g = rng(3);
    let mut cons = 0.0f64;
    for _ in 0..50 {
        let p = random_policy(&mut g);
        let alpha = g.random_range(0.3..3.0);
        let ms = MeanSpec::independent(alpha, 1.0 / alpha).ok()?;
        let (u0, v0) = (g.random_range(0.1..2.0), g.random_range(0.1..2.0));
        let tr = attempt!(r, "C8.7", "mean trajectory", mean_trajectory(&p, &ms, u0, v0, 200));
        let c0 = alpha * u0 + v0;
        for (u, v) in tr {
            cons = cons.max((alpha * u + v - c0).abs() / c0);
        }
    }
    r.at_most("C8.7", "αU_n + V_n conserved at γ = 1", cons, 1e-12);

    // ν symmetry under margin swap.
    let opts = DirectOptions {
        exec,
        ..DirectOptions::default()
    };
    let (a, b) = (bern(0.3, 0.2, 2.0), bern(0.2, 0.3, 2.0));
    for (k, &(l, t)) in [(0.4, 0.6), (0.265, 0.284), (0.8, 0.1)].iter().enumerate() {
        let p = Policy { lambda: l, theta: t };
        let e1 = attempt!(r, "C8.8", "direct", nu_direct(&p, &a, &opts));
        let e2 = attempt!(r, "C8.8", "direct", nu_direct(&p.swapped(), &b.reseeded(SEED + 1 + k as u64), &opts));
        let se = e1.cert.stderr().hypot(e2.cert.stderr());
        r.check(
            "C8.8",
            "ν symmetric under margin swap",
            (e1.value - e2.value).abs() <= 3.0 * se,
            format!("({l},{t}): {:.6} vs {:.6}, 3·se {:.2e}", e1.value, e2.value, 3.0 * se),
        );
    }

    // Bound sandwich on a 5×5 sample for each shipped stream kind.
    let streams: Vec<(&str, EnvStream)> = vec![
        ("bern", bern(0.3, 0.2, 2.0)),
        ("markov", EnvStream::markov(MarkovSpec::example(), SEED).ok()?),
        ("gamma", EnvStream::gamma(&GigSpec::new(4.5, 8.0, 8.0).ok()?, SEED).ok()?),
    ];
    for (name, s) in &streams {
        let mut bad = Vec::new();
        let mut by_bound: std::collections::BTreeMap<&str, usize> = Default::default();
        for i in 1..=5 {
            for j in 1..=5 {
                let p = Policy {
                    lambda: i as f64 / 6.0,
                    theta: j as f64 / 6.0,
                };
                let est: LyapEstimate = if *name == "bern" {
                    attempt!(r, "C8.9", "transfer", transfer_at(&p, s, 40)).estimate
                } else {
                    attempt!(r, "C8.9", "direct", nu_direct(&p, s, &opts))
                };
                let rep = attempt!(r, "C8.9", "bounds", bounds_report(&p, s, Sampling::Auto(400_000), exec));
                let v = rep.violations(&est, 3.0);
                if !v.is_empty() {
                    bad.push(format!("({:.3},{:.3})", p.lambda, p.theta));
                }
                for b in v {
                    *by_bound.entry(b).or_default() += 1;
                }
            }
        }
        let detail = if bad.is_empty() {
            "25/25 policies".to_string()
        } else {
            let counts: Vec<String> = by_bound.iter().map(|(b, n)| format!("{b} at {n}/25")).collect();
            format!("violated: {}", counts.join(", "))
        };
        r.check("C8.9", &format!("bound sandwich, 5×5 sample, {name}"), bad.is_empty(), detail);
    }

    // Continued-fraction paths decrease.
    let s = bern(0.3, 0.2, 2.0);
    let mut paths = 0usize;
    let mut violations = 0usize;
    for (k, &(l, t)) in [(0.265, 0.284), (0.5, 0.5), (0.9, 0.1), (0.1, 0.9)].iter().enumerate() {
        let p = Policy { lambda: l, theta: t };
        let mut st = s.fork(100 + k as u64);
        for _ in 0..2000 {
            let w = st.take_pairs(62);
            let u = attempt!(r, "C8.10", "cf paths", cf_paths(&p, &w, CfSide::U));
            paths += 1;
            if u.windows(2).any(|x| x[1] > x[0] * (1.0 + 1e-12)) {
                violations += 1;
            }
        }
    }
    r.check(
        "C8.10",
        "u_n paths nonincreasing",
        violations == 0,
        format!("{violations} of {paths} sampled paths increase"),
    );

    // ν ≤ E ln⁺ γ_0 on the sweep.
    match grid {
        Some(g) => {
            let lp = attempt!(r, "C8.11", "log-plus bound", bound_logplus_upper(&s, Sampling::Exact, exec)).value;
            let over = g
                .cells
                .iter()
                .filter(|c| c.estimate.is_none_or(|e| e.value > lp))
                .count();
            r.check(
                "C8.11",
                "ν ≤ E ln⁺ γ_0 on all grid cells",
                over == 0,
                format!("{over} of {} cells exceed {lp:.6}", g.cells.len()),
            );
        }
        None => r.check("C8.11", "ν ≤ E ln⁺ γ_0 on all grid cells", false, "no grid available".into()),
    }

    // Continuity at the speculator edge.
    for &l in &[0.2, 0.5, 0.8] {
        let edge = attempt!(r, "C8.12", "boundary", nu_boundary(&Policy { lambda: l, theta: 1.0 }, &s));
        let near = attempt!(r, "C8.12", "direct", nu_direct(&Policy { lambda: l, theta: 1.0 - 1e-3 }, &s, &opts));
        r.close("C8.12", &format!("continuity at θ → 1, λ = {l}"), near.value, edge.value, 5e-3);
    }
    Some(())
}

/// Direct, continued-fraction, ratio and transfer estimates agree.
pub fn criterion_9(r: &mut Report, exec: Execution) -> Option<()> {
    let s = bern(0.3, 0.2, 2.0);
    let policies = [(0.265, 0.284), (0.5, 0.5), (0.2, 0.7), (0.7, 0.3), (0.4, 0.1)];
    for &(l, t) in &policies {
        let p = Policy { lambda: l, theta: t };
        let label = format!("cross-method agreement at ({l}, {t})");
        let tr = attempt!(r, "C9", &label, transfer_at(&p, &s, 60)).estimate;
        let di = attempt!(
            r,
            "C9",
            &label,
            nu_direct(
                &p,
                &s,
                &DirectOptions {
                    exec,
                    ..DirectOptions::default()
                }
            )
        );
        let cf_opts = CfOptions {
            depth: 200,
            replications: 100_000,
            exec,
        };
        let cu = attempt!(r, "C9", &label, nu_cf(&p, &s, &cf_opts));
        let cv = attempt!(r, "C9", &label, nu_cf_dual(&p, &s, &cf_opts));
        let ra = attempt!(
            r,
            "C9",
            &label,
            nu_via_ratio(
                &p,
                &s,
                &RatioOptions {
                    depth: 200,
                    samples: 200_000,
                    exec
                }
            )
        );
        let all = [tr, di, cu, cv, ra];
        let mut ok = true;
        for a in 0..all.len() {
            for b in a + 1..all.len() {
                ok &= all[a].consistent_with(&all[b], 3.0);
            }
        }
        let detail = all
            .iter()
            .map(|e| format!("{} {:.6}±{:.1e}", e.method.as_str(), e.value, e.cert.value()))
            .collect::<Vec<_>>()
            .join(", ");
        r.check("C9", &label, ok, detail);
    }
    Some(())
}
