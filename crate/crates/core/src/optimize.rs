//! Policy optimization over the unit square.

use serde::{Deserialize, Serialize};

use crate::dynamics::Policy;
use crate::env::{EnvStream, Moments, ScalarLaw};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::lyapunov::{nu_direct, nu_transfer, DirectOptions, LyapEstimate, TransferOptions};

/// `E ln(1−λ+λX)` for a positive return `X`.
pub fn kelly_1d(law: &ScalarLaw, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid(format!("Kelly fraction must lie in [0,1], got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    law.expect(|x| (1.0 - lambda + lambda * x).ln())
}

/// Where the one-dimensional Kelly optimum sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KellyCase {
    /// `E X ≤ 1`: holding cash is optimal.
    Cash,
    /// Unique root in (0, 1).
    Interior,
    /// `E X⁻¹ ≤ 1`: full investment is optimal.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KellyMax {
    pub lambda_star: f64,
    pub value: f64,
    pub case: KellyCase,
}

/// Maximizes [`kelly_1d`] over `[0, 1]`.
///
/// In the interior case `λ*` solves `E[1/(1−λ+λX)] = 1`, found by bisection to 1e-10.
pub fn kelly_solve(law: &ScalarLaw) -> Result<KellyMax> {
    let mean = law.mean()?;
    if mean <= 1.0 {
        return Ok(KellyMax {
            lambda_star: 0.0,
            value: 0.0,
            case: KellyCase::Cash,
        });
    }
    if law.expect(|x| 1.0 / x)? <= 1.0 {
        return Ok(KellyMax {
            lambda_star: 1.0,
            value: law.expect(f64::ln)?,
            case: KellyCase::Full,
        });
    }
    // g(λ) = E[1/(1−λ+λX)] − 1 is zero at 0, negative just above it, positive at 1.
    let g = |l: f64| law.expect(|x| 1.0 / (1.0 - l + l * x)).map(|v| v - 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda_star = 0.5 * (lo + hi);
    Ok(KellyMax {
        lambda_star,
        value: kelly_1d(law, lambda_star)?,
        case: KellyCase::Interior,
    })
}

/// Best policies on the edges `θ = 1` and `λ = 1` (the edges `λ = 0`, `θ = 0` give 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMax {
    /// Optimum of `E ln(1−λ+λγ_0)` over `λ`, at `(λ*, 1)`.
    pub theta_one: KellyMax,
    /// Optimum of `E ln(1−θ+θζ_0)` over `θ`, at `(1, θ*)`.
    pub lambda_one: KellyMax,
    pub policy: Policy,
    pub value: f64,
}

pub fn kelly_boundary_max(stream: &EnvStream) -> Result<BoundaryMax> {
    let theta_one = kelly_solve(&ScalarLaw::gamma0(stream)?)?;
    let lambda_one = kelly_solve(&ScalarLaw::zeta0(stream)?)?;
    let (policy, value) = if theta_one.value >= lambda_one.value {
        // λ* = 0 on this edge is the trivial policy; report the corner instead.
        (Policy::new(theta_one.lambda_star, 1.0)?, theta_one.value)
    } else {
        (Policy::new(1.0, lambda_one.lambda_star)?, lambda_one.value)
    };
    Ok(BoundaryMax {
        theta_one,
        lambda_one,
        policy,
        value,
    })
}

/// Per-cell estimator of a grid sweep.
#[derive(Clone, Copy, Debug)]
pub enum Estimator {
    /// Transfer operator; needs finite i.i.d. support.
    Transfer(TransferOptions),
    Direct(DirectOptions),
}

impl Estimator {
    /// The sweep default: the transfer operator with the relative stopping
    /// rule when the stream is finite i.i.d., the direct estimator otherwise.
    pub fn for_stream(stream: &EnvStream, rel_tol: f64) -> Self {
        if stream.atoms().is_some() {
            Estimator::Transfer(TransferOptions::sweep(rel_tol))
        } else {
            Estimator::Direct(DirectOptions {
                rel_tol,
                replications: 4,
                exec: Execution::Sequential,
                ..DirectOptions::default()
            })
        }
    }

    pub fn estimate(&self, p: &Policy, stream: &EnvStream) -> Result<LyapEstimate> {
        match self {
            Estimator::Transfer(o) => {
                let atoms = stream.atoms().ok_or(Error::NeedsFiniteSupport)?;
                let r = nu_transfer(p, &atoms, o)?;
                if r.converged {
                    Ok(r.estimate)
                } else {
                    Err(Error::NotConverged {
                        iterations: r.estimate.iterations,
                        last: r.estimate.value,
                        trailing: r.trace.iter().rev().take(8).rev().copied().collect(),
                    })
                }
            }
            Estimator::Direct(o) => nu_direct(p, stream, o),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub i: usize,
    pub j: usize,
    pub policy: Policy,
    pub estimate: Option<LyapEstimate>,
    /// Failure message of a flagged cell.
    pub flag: Option<String>,
}

/// Estimates on the interior grid `λ_i = i/(res+1)`, `θ_j = j/(res+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyGrid {
    pub resolution: usize,
    /// Row-major in `λ`: cell `(i, j)` sits at `(i−1)·res + (j−1)`.
    pub cells: Vec<GridCell>,
    pub argmax: Option<(Policy, LyapEstimate)>,
    pub boundary_max: Option<BoundaryMax>,
}

impl PolicyGrid {
    pub fn cell(&self, i: usize, j: usize) -> &GridCell {
        &self.cells[(i - 1) * self.resolution + (j - 1)]
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 / (self.resolution + 1) as f64
    }

    pub fn flagged(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().filter(|c| c.flag.is_some())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GridOptions {
    pub resolution: usize,
    pub estimator: Estimator,
    pub exec: Execution,
    /// Fill `boundary_max` from the closed forms (needs enumerable or gamma laws).
    pub boundary: bool,
}

impl GridOptions {
    pub fn new(stream: &EnvStream, resolution: usize, rel_tol: f64) -> Self {
        GridOptions {
            resolution,
            estimator: Estimator::for_stream(stream, rel_tol),
            exec: Execution::default(),
            boundary: true,
        }
    }
}

/// Evaluates every interior cell in parallel; cells see independent forks of
/// `stream`, so the result depends only on the seed.
pub fn grid_search(stream: &EnvStream, opts: &GridOptions) -> Result<PolicyGrid> {
    let res = opts.resolution;
    if res < 2 {
        return Err(invalid(format!("grid resolution must be at least 2, got {res}")));
    }
    let h = 1.0 / (res + 1) as f64;
    let cells = opts.exec.map(res * res, |k| {
        let (i, j) = (k / res + 1, k % res + 1);
        let policy = Policy {
            lambda: i as f64 * h,
            theta: j as f64 * h,
        };
        let est = opts.estimator.estimate(&policy, &stream.fork(k as u64));
        let (estimate, flag) = match est {
            Ok(e) => (Some(e), None),
            Err(Error::NotConverged { last, iterations, trailing }) => {
                let e = LyapEstimate {
                    value: last,
                    method: match opts.estimator {
                        Estimator::Transfer(_) => crate::lyapunov::Method::Transfer,
                        Estimator::Direct(_) => crate::lyapunov::Method::Direct,
                    },
                    iterations: iterations.max(1),
                    cert: crate::lyapunov::Certificate::None,
                    seed: Some(stream.seed()),
                };
                let msg = format!("not converged after {iterations} iterations; trailing {trailing:?}");
                (Some(e), Some(msg))
            }
            Err(e) => (None, Some(e.to_string())),
        };
        GridCell {
            i,
            j,
            policy,
            estimate,
            flag,
        }
    });
    let argmax = argmax_of(&cells);
    let boundary_max = if opts.boundary {
        Some(kelly_boundary_max(stream)?)
    } else {
        None
    };
    Ok(PolicyGrid {
        resolution: res,
        cells,
        argmax,
        boundary_max,
    })
}

/// Largest unflagged value; ties go to the smallest `λ`, then the smallest `θ`.
fn argmax_of(cells: &[GridCell]) -> Option<(Policy, LyapEstimate)> {
    let mut best: Option<&GridCell> = None;
    for c in cells.iter().filter(|c| c.flag.is_none()) {
        let Some(e) = c.estimate else { continue };
        let better = match best.and_then(|b| b.estimate.map(|be| (b, be))) {
            None => true,
            Some((b, be)) => {
                e.value > be.value
                    || (e.value == be.value && (c.i, c.j) < (b.i, b.j))
            }
        };
        if better {
            best = Some(c);
        }
    }
    best.and_then(|c| c.estimate.map(|e| (c.policy, e)))
}

/// Result of the local search around a coarse optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct Refined {
    pub policy: Policy,
    pub estimate: LyapEstimate,
    /// Final pattern step.
    pub step: f64,
    pub evaluations: usize,
}

/// 3×3 pattern search: move to the best neighbour, halve the step when the
/// centre wins, stop after `levels` halvings.
pub fn refine(stream: &EnvStream, start: Policy, step: f64, levels: usize, estimator: &Estimator) -> Result<Refined> {
    if !start.is_interior() || !(step > 0.0) {
        return Err(invalid("refinement needs an interior start and a positive step"));
    }
    let mut centre = start;
    let mut best = estimator.estimate(&centre, stream)?;
    let mut step = step;
    let mut evaluations = 1;
    let mut halvings = 0;
    while halvings < levels {
        let mut moved = false;
        let mut cand = (centre, best);
        for di in [-1.0, 0.0, 1.0] {
            for dj in [-1.0, 0.0, 1.0] {
                if di == 0.0 && dj == 0.0 {
                    continue;
                }
                let p = Policy {
                    lambda: centre.lambda + di * step,
                    theta: centre.theta + dj * step,
                };
                if !p.is_interior() {
                    continue;
                }
                let e = estimator.estimate(&p, stream)?;
                evaluations += 1;
                if e.value > cand.1.value {
                    cand = (p, e);
                    moved = true;
                }
            }
        }
        if moved {
            centre = cand.0;
            best = cand.1;
        } else {
            step *= 0.5;
            halvings += 1;
        }
    }
    Ok(Refined {
        policy: centre,
        estimate: best,
        step,
        evaluations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum KellyEffect {
    /// The certified interior value beats the best boundary value by `margin`.
    KellyEffect { margin: f64 },
    Inconclusive { margin: f64 },
}

impl KellyEffect {
    pub fn margin(&self) -> f64 {
        match *self {
            KellyEffect::KellyEffect { margin } | KellyEffect::Inconclusive { margin } => margin,
        }
    }

    pub fn is_effect(&self) -> bool {
        matches!(self, KellyEffect::KellyEffect { .. })
    }
}

/// Compares the lower end of the interior certificate with the boundary
/// maximum. Statistical certificates count `k` standard errors.
pub fn kelly_effect_test(interior: &LyapEstimate, boundary_value: f64, k: f64) -> KellyEffect {
    let (lo, _) = interior.interval(k);
    let margin = lo - boundary_value;
    if margin > 0.0 {
        KellyEffect::KellyEffect { margin }
    } else {
        KellyEffect::Inconclusive { margin }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub gamma: f64,
    /// `Δ = E γ_0⁻¹`.
    pub delta: f64,
    pub notes: Vec<String>,
}

/// Classifies by the sign of `γ − 1`; sampled moments count as critical
/// within three standard errors.
pub fn classify_regime(m: &Moments) -> RegimeReport {
    let band = m.stderr.map_or(1e-12 * m.gamma.abs().max(1.0), |s| 3.0 * s[2]);
    let g = m.gamma;
    let mut notes = Vec::new();
    let regime = if (g - 1.0).abs() <= band {
        notes.push("γ = 1: mean-field growth is neutral".to_string());
        Regime::Critical
    } else if g < 1.0 {
        if m.cov_eps_delta >= 0.0 {
            notes.push("γ < 1 and cov(ε,δ) ≥ 0: ν ≤ 0 for every policy".to_string());
        } else {
            notes.push("γ < 1 with cov(ε,δ) < 0: no sign guarantee".to_string());
        }
        Regime::Subcritical
    } else {
        notes.push("γ > 1: ν > 0 near (small λ, θ = 1)".to_string());
        Regime::Supercritical
    };
    if regime == Regime::Supercritical {
        if m.mean_inv_gamma > 1.0 {
            notes.push(format!("Δ = {:.6} > 1: boundary maximizer interior to the edge θ = 1", m.mean_inv_gamma));
        } else {
            notes.push(format!("Δ = {:.6} ≤ 1: boundary maximizer at the corner (1, 1)", m.mean_inv_gamma));
        }
    }
    RegimeReport {
        regime,
        gamma: g,
        delta: m.mean_inv_gamma,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fair_coin_root() {
        let law = ScalarLaw::Atoms(vec![(0.5, 0.5), (2.0, 0.5)]);
        let k = kelly_solve(&law).unwrap();
        assert_eq!(k.case, KellyCase::Interior);
        assert!((k.lambda_star - 0.5).abs() < 1e-9);
    }

    #[test]
    fn cash_and_full_cases() {
        let down = ScalarLaw::Atoms(vec![(0.5, 0.5), (1.2, 0.5)]);
        assert_eq!(kelly_solve(&down).unwrap().case, KellyCase::Cash);
        let up = ScalarLaw::Atoms(vec![(1.1, 0.5), (3.0, 0.5)]);
        let k = kelly_solve(&up).unwrap();
        assert_eq!(k.case, KellyCase::Full);
        assert_eq!(k.lambda_star, 1.0);
    }

    #[test]
    fn ties_break_to_smallest_lambda_then_theta() {
        let e = LyapEstimate {
            value: 1.0,
            method: crate::lyapunov::Method::Direct,
            iterations: 1,
            cert: crate::lyapunov::Certificate::Exact,
            seed: None,
        };
        let mk = |i, j| GridCell {
            i,
            j,
            policy: Policy {
                lambda: i as f64 / 4.0,
                theta: j as f64 / 4.0,
            },
            estimate: Some(e),
            flag: None,
        };
        let cells = vec![mk(2, 1), mk(1, 3), mk(1, 2)];
        let (p, _) = argmax_of(&cells).unwrap();
        assert_eq!((p.lambda, p.theta), (0.25, 0.5));
    }

    #[test]
    fn zero_values_are_inconclusive() {
        let e = LyapEstimate {
            value: 0.0,
            method: crate::lyapunov::Method::Transfer,
            iterations: 1,
            cert: crate::lyapunov::Certificate::Analytic(0.0),
            seed: None,
        };
        assert!(!kelly_effect_test(&e, 0.0, 3.0).is_effect());
    }
}
