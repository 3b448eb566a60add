//! Command implementations.

use std::path::Path;

use collector::bounds::{bounds_report, Sampling};
use collector::env::env_moments;
use collector::lyapunov::{
    nu_boundary, nu_cf, nu_cf_dual, nu_direct, nu_gig_diagonal, nu_transfer, nu_via_ratio, CfOptions, DirectOptions,
    RatioOptions, TransferOptions,
};
use collector::meanfield::{gamma_one_limits, mean_trajectory, mu_general, mu_gradient_signs, MeanSpec};
use collector::optimize::{
    classify_regime, grid_search, kelly_effect_test, refine, BoundaryMax, Estimator, GridOptions, KellyEffect,
    PolicyGrid, RegimeReport,
};
use collector::{EnvStream, Error, Execution, LyapEstimate, Policy};
use collector_verify::{run, Scope};
use image::{Rgb, RgbImage};
use serde::Serialize;

use crate::config::{MethodArg, Model, Resolved};
use crate::output::{num, Table, ESTIMATE_COLUMNS, HEATMAP_COLUMNS, MEANFIELD_COLUMNS};
use crate::{BoundsArgs, CliError, EstimateArgs, HeatmapArgs, MeanfieldArgs, OptimizeArgs, VerifyArgs};

/// Draws for Monte Carlo moments of continuous laws.
const MOMENT_BUDGET: usize = 400_000;

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn numeric(context: &str, e: Error) -> CliError {
    CliError::Numeric(format!("{context}: {e}"))
}

/// Per-method knobs gathered from flags and the config.
#[derive(Clone, Copy, Debug, Default)]
pub struct Knobs {
    pub iters: Option<u64>,
    pub rel_tol: Option<f64>,
    pub replications: Option<usize>,
    pub depth: Option<usize>,
    pub exec: Option<Execution>,
}

fn finite_iid(stream: &EnvStream) -> bool {
    stream.is_iid() && stream.atoms().is_some()
}

fn run_method(m: MethodArg, p: &Policy, stream: &EnvStream, cfg: &Resolved, k: &Knobs) -> Result<LyapEstimate, CliError> {
    let exec = k.exec.unwrap_or_default();
    let ctx = |e| numeric(&format!("method {m:?} at ({}, {})", p.lambda, p.theta), e);
    if p.on_boundary() {
        return nu_boundary(p, stream).map_err(ctx);
    }
    let m = match m {
        MethodArg::Auto if finite_iid(stream) => MethodArg::Transfer,
        MethodArg::Auto => MethodArg::Direct,
        other => other,
    };
    let direct = DirectOptions {
        rel_tol: k.rel_tol.unwrap_or(1e-3),
        replications: k.replications.unwrap_or(30),
        fixed_steps: k.iters,
        exec,
        ..DirectOptions::default()
    };
    let cf = CfOptions {
        depth: k.depth.unwrap_or(60),
        replications: k.replications.unwrap_or(100_000),
        exec,
    };
    match m {
        MethodArg::Transfer => {
            if !finite_iid(stream) {
                return Err(ctx(Error::NeedsFiniteSupport));
            }
            let atoms = stream.atoms().ok_or(Error::NeedsFiniteSupport).map_err(ctx)?;
            let opts = TransferOptions {
                n_iter: k.iters.map_or(40, |n| n as usize),
                ..TransferOptions::default()
            };
            nu_transfer(p, &atoms, &opts).map(|r| r.estimate).map_err(ctx)
        }
        MethodArg::Direct => nu_direct(p, stream, &direct).map_err(ctx),
        MethodArg::Cf => nu_cf(p, stream, &cf).map_err(ctx),
        MethodArg::CfDual => nu_cf_dual(p, stream, &cf).map_err(ctx),
        MethodArg::Ratio => {
            let opts = RatioOptions {
                depth: k.depth.unwrap_or(60),
                samples: k.replications.unwrap_or(200_000),
                exec,
            };
            nu_via_ratio(p, stream, &opts).map_err(ctx)
        }
        MethodArg::Boundary => nu_boundary(p, stream).map_err(ctx),
        MethodArg::Gig | MethodArg::GigQuadrature => {
            if cfg.model != Model::Gamma {
                return Err(CliError::Usage("gig methods need --model gamma".into()));
            }
            if p.lambda != p.theta {
                return Err(CliError::Usage("gig methods need lambda = theta".into()));
            }
            let budget = k.replications.unwrap_or(1_000_000);
            let d = nu_gig_diagonal(&cfg.gig_spec()?, p.lambda, budget, cfg.seed, exec).map_err(ctx)?;
            if m == MethodArg::Gig {
                Ok(d.mc)
            } else {
                d.quadrature
                    .ok_or_else(|| CliError::Usage("gig_quadrature needs equal rates r = s".into()))
            }
        }
        MethodArg::Auto => unreachable!("resolved above"),
    }
}

pub fn estimate(a: &EstimateArgs) -> Result<(), CliError> {
    let cfg = a.common.resolve()?;
    let stream = cfg.stream()?;
    let p = cfg.policy(a.lambda, a.theta)?;
    let est = &cfg.file.estimator;
    let methods = if a.method.is_empty() {
        est.methods.clone().unwrap_or_else(|| vec![MethodArg::Auto])
    } else {
        a.method.clone()
    };
    let knobs = Knobs {
        iters: a.iters.or(est.iters),
        rel_tol: a.rel_tol.or(est.rel_tol),
        replications: a.replications.or(est.replications),
        depth: a.depth.or(est.depth),
        exec: Some(exec(a.common.sequential)),
    };
    let mut table = Table::new("estimate", &ESTIMATE_COLUMNS)?;
    for m in methods {
        let e = run_method(m, &p, &stream, &cfg, &knobs)?;
        table.estimate(p.lambda, p.theta, &e, cfg.seed)?;
    }
    table.finish(cfg.out.as_deref())
}

fn grid_estimator(m: MethodArg, stream: &EnvStream, rel_tol: f64) -> Result<Estimator, CliError> {
    match m {
        MethodArg::Auto => Ok(Estimator::for_stream(stream, rel_tol)),
        MethodArg::Transfer if finite_iid(stream) => Ok(Estimator::Transfer(TransferOptions::sweep(rel_tol))),
        MethodArg::Transfer => Err(CliError::Usage("transfer sweeps need a finite i.i.d. law".into())),
        MethodArg::Direct => Ok(Estimator::Direct(DirectOptions {
            rel_tol,
            replications: 4,
            exec: Execution::Sequential,
            ..DirectOptions::default()
        })),
        other => Err(CliError::Usage(format!("grid sweeps support auto, transfer or direct, not {other:?}"))),
    }
}

fn sweep(cfg: &Resolved, stream: &EnvStream, resolution: Option<usize>, default_res: usize, method: MethodArg, rel_tol: Option<f64>, sequential: bool) -> Result<PolicyGrid, CliError> {
    let res = resolution.or(cfg.file.grid.resolution).unwrap_or(default_res);
    if res < 2 {
        return Err(CliError::Usage(format!("grid resolution must be at least 2, got {res}")));
    }
    let rel_tol = rel_tol.or(cfg.file.estimator.rel_tol).unwrap_or(1e-4);
    let opts = GridOptions {
        resolution: res,
        estimator: grid_estimator(method, stream, rel_tol)?,
        exec: exec(sequential),
        boundary: stream.atoms().is_some() || stream.gamma_spec().is_some(),
    };
    grid_search(stream, &opts).map_err(|e| numeric("grid", e))
}

pub fn heatmap(a: &HeatmapArgs) -> Result<(), CliError> {
    let cfg = a.common.resolve()?;
    let stream = cfg.stream()?;
    let grid = sweep(&cfg, &stream, a.resolution, 50, a.method, a.rel_tol, a.common.sequential)?;
    let mut table = Table::new("heatmap", &HEATMAP_COLUMNS)?;
    for c in &grid.cells {
        let (nu, cert, iters) = match &c.estimate {
            Some(e) => (num(e.value), num(e.cert.value()), e.iterations.to_string()),
            None => ("nan".into(), "nan".into(), "0".into()),
        };
        table.row([num(c.policy.lambda), num(c.policy.theta), nu, cert, iters])?;
    }
    table.finish(cfg.out.as_deref())?;
    let non_positive = grid
        .cells
        .iter()
        .filter(|c| c.estimate.is_some_and(|e| e.value <= 0.0))
        .count();
    if let Some((p, e)) = &grid.argmax {
        eprintln!("argmax: lambda = {} theta = {} nu = {}", p.lambda, p.theta, e.value);
    }
    if let Some(b) = &grid.boundary_max {
        eprintln!("boundary max: lambda = {} theta = {} nu = {}", b.policy.lambda, b.policy.theta, b.value);
    }
    eprintln!("non-positive cells: {non_positive}, failed cells: {}", grid.flagged().count());
    for c in grid.flagged() {
        eprintln!("  flagged ({}, {}): {}", c.policy.lambda, c.policy.theta, c.flag.as_deref().unwrap_or(""));
    }
    if let Some(png) = a.png.as_ref().or(cfg.file.output.png.as_ref()) {
        render(&grid, png)?;
    }
    Ok(())
}

/// Heatmap with `λ` to the right and `θ` upwards; cells with `ν ≤ 0` or no
/// estimate stay white.
fn render(grid: &PolicyGrid, path: &Path) -> Result<(), CliError> {
    const CELL: u32 = 8;
    let res = grid.resolution as u32;
    let max = grid
        .cells
        .iter()
        .filter_map(|c| c.estimate.map(|e| e.value))
        .fold(0.0f64, f64::max);
    let mut img = RgbImage::from_pixel(res * CELL, res * CELL, Rgb([255, 255, 255]));
    for c in &grid.cells {
        let Some(e) = c.estimate else { continue };
        if e.value <= 0.0 || max <= 0.0 {
            continue;
        }
        let s = e.value / max;
        let colour = Rgb([255, (230.0 * (1.0 - s)) as u8 + 25, (200.0 * (1.0 - s)) as u8]);
        let (x0, y0) = ((c.i as u32 - 1) * CELL, (res - c.j as u32) * CELL);
        for dx in 0..CELL {
            for dy in 0..CELL {
                img.put_pixel(x0 + dx, y0 + dy, colour);
            }
        }
    }
    img.save(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct PointSummary {
    lambda: f64,
    theta: f64,
    nu: f64,
    method: &'static str,
    cert_type: &'static str,
    cert_value: f64,
}

impl PointSummary {
    fn new(p: &Policy, e: &LyapEstimate) -> Self {
        PointSummary {
            lambda: p.lambda,
            theta: p.theta,
            nu: e.value,
            method: e.method.as_str(),
            cert_type: e.cert.kind(),
            cert_value: e.cert.value(),
        }
    }
}

#[derive(Serialize)]
struct OptimizeSummary {
    seed: u64,
    resolution: usize,
    grid_argmax: PointSummary,
    refined: PointSummary,
    boundary: Option<BoundaryMax>,
    kelly: Option<KellyEffect>,
    regime: RegimeReport,
}

pub fn optimize(a: &OptimizeArgs) -> Result<(), CliError> {
    let cfg = a.common.resolve()?;
    let stream = cfg.stream()?;
    let grid = sweep(&cfg, &stream, a.resolution, 20, a.method, a.rel_tol, a.common.sequential)?;
    let (start, coarse) = grid
        .argmax
        .ok_or_else(|| CliError::Numeric("no grid cell produced an estimate".into()))?;
    let rel_tol = a.rel_tol.or(cfg.file.estimator.rel_tol).unwrap_or(1e-4);
    let estimator = grid_estimator(a.method, &stream, rel_tol)?;
    let step = 0.5 / (grid.resolution + 1) as f64;
    let refined = refine(&stream, start, step, a.levels, &estimator).map_err(|e| numeric("refine", e))?;
    let knobs = Knobs {
        exec: Some(exec(a.common.sequential)),
        ..Knobs::default()
    };
    let certified = run_method(MethodArg::Auto, &refined.policy, &stream, &cfg, &knobs)?;
    let kelly = grid.boundary_max.map(|b| kelly_effect_test(&certified, b.value, 3.0));
    let budget = (!stream.is_finite_support()).then_some(MOMENT_BUDGET);
    let moments = env_moments(&stream, budget).map_err(|e| numeric("moments", e))?;
    let summary = OptimizeSummary {
        seed: cfg.seed,
        resolution: grid.resolution,
        grid_argmax: PointSummary::new(&start, &coarse),
        refined: PointSummary::new(&refined.policy, &certified),
        boundary: grid.boundary_max,
        kelly,
        regime: classify_regime(&moments),
    };
    let text = toml::to_string(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    match &cfg.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn bounds(a: &BoundsArgs) -> Result<(), CliError> {
    let cfg = a.common.resolve()?;
    let stream = cfg.stream()?;
    let p = cfg.policy(a.lambda, a.theta)?;
    let sampling = Sampling::Auto(a.draws);
    let r = bounds_report(&p, &stream, sampling, exec(a.common.sequential)).map_err(|e| numeric("bounds", e))?;
    let mut table = Table::new("estimate", &ESTIMATE_COLUMNS)?;
    for (name, b) in r.named() {
        let cert = if b.stderr == 0.0 { "exact" } else { "stderr" };
        table.row([
            num(p.lambda),
            num(p.theta),
            format!("bound:{name}"),
            num(b.value),
            cert.to_string(),
            num(b.stderr),
            "0".to_string(),
            cfg.seed.to_string(),
        ])?;
    }
    table.finish(cfg.out.as_deref())
}

pub fn meanfield(a: &MeanfieldArgs) -> Result<(), CliError> {
    let cfg = a.common.resolve()?;
    let p = cfg.policy(a.lambda, a.theta)?;
    let spec = match (a.alpha, a.beta) {
        (Some(al), Some(be)) => MeanSpec::new(al, be, a.gamma.unwrap_or(al * be)),
        (None, None) => {
            let stream = cfg.stream()?;
            let budget = (!stream.is_finite_support()).then_some(MOMENT_BUDGET);
            let m = env_moments(&stream, budget).map_err(|e| numeric("moments", e))?;
            MeanSpec::from_moments(&m)
        }
        _ => return Err(CliError::Usage("--alpha and --beta go together".into())),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let traj = mean_trajectory(&p, &spec, a.u0, a.v0, a.steps).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut table = Table::new("meanfield", &MEANFIELD_COLUMNS)?;
    for (n, (u, v)) in traj.iter().enumerate() {
        table.row([n.to_string(), num(*u), num(*v), num(spec.alpha * u + v)])?;
    }
    table.finish(cfg.out.as_deref())?;

    let ab = spec.alpha * spec.beta;
    eprintln!("alpha = {} beta = {} gamma = {}", spec.alpha, spec.beta, spec.gamma);
    eprintln!("mu(lambda, theta) = {}", mu_general(&p, spec.gamma, ab));
    eprintln!("mu(theta, lambda) = {}", mu_general(&p.swapped(), spec.gamma, ab));
    if let Ok((sl, st)) = mu_gradient_signs(&p, spec.gamma) {
        eprintln!("gradient signs: d/dlambda {sl:+}, d/dtheta {st:+}");
    }
    if let Ok(lim) = gamma_one_limits(&p, &spec, a.u0, a.v0) {
        eprintln!("gamma = 1 limits: u = {} v = {} ({:?})", lim.u_inf, lim.v_inf, lim.monotonicity);
    }
    if p.theta == 0.0 {
        let err = traj
            .iter()
            .enumerate()
            .map(|(n, (u, _))| (u - (1.0 - p.lambda).powi(n as i32) * a.u0).abs())
            .fold(0.0, f64::max);
        eprintln!("theta = 0 closed form U_n = (1-lambda)^n U_0: max abs error {err:e}");
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    let report = run(Scope::Golden, exec(a.sequential), true);
    println!("verify: {} passed, {} failed", report.passed(), report.failed());
    if report.failed() == 0 {
        Ok(())
    } else {
        Err(CliError::Verification(report.failed()))
    }
}
