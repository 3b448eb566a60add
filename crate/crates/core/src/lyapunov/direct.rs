use super::{mean_stderr, Certificate, LyapEstimate, Method};
use crate::dynamics::{step_matrix, CollectorState, Policy, RENORM_EVERY};
use crate::env::EnvStream;
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Settings for [`nu_direct`].
#[derive(Clone, Copy, Debug)]
pub struct DirectOptions {
    /// Stop when successive checkpoint values differ by less than this
    /// fraction of the current value.
    pub rel_tol: f64,
    /// Absolute floor for the stopping rule, for exponents near zero.
    pub abs_tol: f64,
    pub max_iter: u64,
    pub min_iter: u64,
    /// Steps between checkpoints of the stopping rule.
    pub check_every: u64,
    /// Run exactly this many steps, ignoring the stopping rule.
    pub fixed_steps: Option<u64>,
    pub replications: usize,
    pub start: CollectorState,
    pub exec: Execution,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions {
            rel_tol: 1e-3,
            abs_tol: 1e-9,
            max_iter: 5_000_000,
            min_iter: 10_000,
            check_every: 1000,
            fixed_steps: None,
            replications: 30,
            start: CollectorState { x: 1.0, y: 1.0 },
            exec: Execution::default(),
        }
    }
}

impl DirectOptions {
    pub fn fixed(steps: u64) -> Self {
        DirectOptions {
            fixed_steps: Some(steps),
            ..Self::default()
        }
    }
}

struct RunResult {
    value: f64,
    steps: u64,
    converged: bool,
    trailing: Vec<f64>,
}

fn single_run(p: &Policy, mut stream: EnvStream, opts: &DirectOptions) -> RunResult {
    let mut v = opts.start.as_vec();
    let mut offset = 0.0;
    let limit = opts.fixed_steps.unwrap_or(opts.max_iter).max(1);
    let mut trailing: Vec<f64> = Vec::new();
    let mut prev: Option<f64> = None;
    let mut k: u64 = 0;
    let current = |v: [f64; 2], offset: f64, k: u64| (offset + v[0].max(v[1]).ln()) / k as f64;
    while k < limit {
        let m = step_matrix(p, &stream.next_pair());
        v = m.apply(v);
        k += 1;
        if k.is_multiple_of(RENORM_EVERY as u64) {
            let s = v[0].max(v[1]);
            v = [v[0] / s, v[1] / s];
            offset += s.ln();
        }
        if opts.fixed_steps.is_none() && k.is_multiple_of(opts.check_every) {
            let nu = current(v, offset, k);
            trailing.push(nu);
            if trailing.len() > 8 {
                trailing.remove(0);
            }
            if let Some(pv) = prev {
                let d = (nu - pv).abs();
                if k >= opts.min_iter && (d < opts.rel_tol * nu.abs() || d < opts.abs_tol) {
                    return RunResult {
                        value: nu,
                        steps: k,
                        converged: true,
                        trailing,
                    };
                }
            }
            prev = Some(nu);
        }
    }
    let nu = current(v, offset, k);
    trailing.push(nu);
    RunResult {
        value: nu,
        steps: k,
        converged: opts.fixed_steps.is_some(),
        trailing,
    }
}

/// `ν` from `(1/k) ln ‖state_k‖` along independent trajectories.
///
/// Each replication runs on its own fork of `stream` until the relative
/// stopping rule holds at a checkpoint; the estimate is the mean over
/// replications with its standard error.
pub fn nu_direct(p: &Policy, stream: &EnvStream, opts: &DirectOptions) -> Result<LyapEstimate> {
    p.require_interior("the direct estimator needs an interior policy")?;
    if opts.replications < 2 || opts.check_every == 0 || !(opts.rel_tol > 0.0) {
        return Err(crate::error::invalid("direct estimator needs ≥ 2 replications, rel_tol > 0, check_every ≥ 1"));
    }
    let runs = opts
        .exec
        .map(opts.replications, |r| single_run(p, stream.fork(r as u64), opts));
    let values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let (mean, se) = mean_stderr(&values);
    let iterations = runs.iter().map(|r| r.steps).max().unwrap_or(0);
    if let Some(bad) = runs.iter().find(|r| !r.converged) {
        return Err(Error::NotConverged {
            iterations: bad.steps,
            last: mean,
            trailing: bad.trailing.clone(),
        });
    }
    Ok(LyapEstimate {
        value: mean,
        method: Method::Direct,
        iterations,
        cert: Certificate::StdErr(se),
        seed: Some(stream.seed()),
    })
}
