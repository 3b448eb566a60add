//! Upper and lower bounds on `ν` at a fixed policy.
//!
//! All integrands read a window of consecutive draws ending at time `n`
//! (`w[len−1]` is `(ε_n, δ_n)`), so every bound of one report comes from the
//! same joint law. Finite-support and Markov streams are enumerated exactly;
//! continuous laws use a sliding window along forked streams.
//!
//! The `Y`-side bounds are the `X`-side formulas at the swapped policy on
//! the stream `(δ_n, ε_{n+1})`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ar_coefficients, step_matrix, Policy};
use crate::env::{dual_stream, EnvPair, EnvStream};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::lyapunov::{Certificate, LyapEstimate};

/// A bound with its Monte Carlo standard error (zero when exact).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub stderr: f64,
}

impl BoundValue {
    pub fn exact(value: f64) -> Self {
        BoundValue { value, stderr: 0.0 }
    }
}

/// How expectations over windows are evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sampling {
    /// Enumerate the joint law; fails for continuous laws.
    Exact,
    /// Enumerate when possible, otherwise Monte Carlo with this many draws.
    Auto(usize),
    /// Monte Carlo with this many draws even when enumeration is possible.
    MonteCarlo(usize),
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::Auto(400_000)
    }
}

const BATCHES: usize = 64;

/// `E f(window)` over windows of `k` consecutive draws.
pub fn window_expectation<F>(stream: &EnvStream, k: usize, sampling: Sampling, exec: Execution, f: F) -> Result<BoundValue>
where
    F: Fn(&[EnvPair]) -> f64 + Sync + Send,
{
    let budget = match sampling {
        Sampling::MonteCarlo(n) => n,
        _ => match stream.windows(k) {
            Ok(ws) => return Ok(BoundValue::exact(ws.iter().map(|(w, p)| p * f(w)).sum())),
            Err(e) => match sampling {
                Sampling::Auto(n) => n,
                _ => return Err(e),
            },
        },
    };
    if budget < 2 * BATCHES {
        return Err(invalid(format!("bound Monte Carlo needs at least {} draws", 2 * BATCHES)));
    }
    // Batch means over independent forks absorb the overlap of sliding windows.
    let per = budget / BATCHES;
    let means = exec.map(BATCHES, |b| {
        let mut s = stream.fork(0xb0_0000 + b as u64);
        let mut w: Vec<EnvPair> = s.take_pairs(k);
        let mut acc = 0.0;
        for i in 0..per {
            if i > 0 {
                w.rotate_left(1);
                w[k - 1] = s.next_pair();
            }
            acc += f(&w);
        }
        acc / per as f64
    });
    let n = BATCHES as f64;
    let mean = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(BoundValue {
        value: mean,
        stderr: (var / n).sqrt(),
    })
}

fn require(p: &Policy) -> Result<()> {
    if p.is_interior() {
        Ok(())
    } else {
        Err(Error::PolicyDomain {
            lambda: p.lambda,
            theta: p.theta,
            reason: "the recursion bounds need an interior policy",
        })
    }
}

#[inline]
fn d(w: &[EnvPair], i: usize) -> f64 {
    w[i].delta / w[i - 1].delta
}

/// `E ln(1−λ+λθγ_n + (1−θ)d_n·λθγ_{n−1}/(1−λ+λθγ_{n−1}))`.
pub fn bound_art_lower(p: &Policy, stream: &EnvStream, sampling: Sampling, exec: Execution) -> Result<BoundValue> {
    require(p)?;
    let (l, t) = (p.lambda, p.theta);
    window_expectation(stream, 2, sampling, exec, |w| {
        let (g0, g1) = (w[0].gamma(), w[1].gamma());
        let frac = l * t * g0 / (1.0 - l + l * t * g0);
        (1.0 - l + l * t * g1 + (1.0 - t) * d(w, 1) * frac).ln()
    })
}

/// `E ln(p_n + q_n/p_{n−1})`, from `X_{n+1}/X_n ≤ p_n + q_n/p_{n−1}`.
pub fn bound_nam1_upper(p: &Policy, stream: &EnvStream, sampling: Sampling, exec: Execution) -> Result<BoundValue> {
    require(p)?;
    window_expectation(stream, 3, sampling, exec, |w| {
        let (p1, _) = ar_coefficients(p, w[1].gamma(), d(w, 1));
        let (p2, q2) = ar_coefficients(p, w[2].gamma(), d(w, 2));
        (p2 + q2 / p1).ln()
    })
}

/// `½·E ln(p_n p_{n−1} + q_n)`, the two-step bound per period.
pub fn bound_nam3_upper(p: &Policy, stream: &EnvStream, sampling: Sampling, exec: Execution) -> Result<BoundValue> {
    require(p)?;
    window_expectation(stream, 3, sampling, exec, |w| {
        let (p1, _) = ar_coefficients(p, w[1].gamma(), d(w, 1));
        let (p2, q2) = ar_coefficients(p, w[2].gamma(), d(w, 2));
        0.5 * (p2 * p1 + q2).ln()
    })
}

/// `E ln μ_0`, with `μ_0` the Perron root of one step matrix.
///
/// The Perron root is not a matrix norm for these non-symmetric matrices, so
/// this value can fall below `ν`; [`bound_spectral_norm_upper`] is the
/// norm-based bound.
pub fn bound_ergodic_upper(p: &Policy, stream: &EnvStream, sampling: Sampling, exec: Execution) -> Result<BoundValue> {
    window_expectation(stream, 1, sampling, exec, |w| step_matrix(p, &w[0]).top_eigenvalue().ln())
}

/// `E ln ‖M_0‖₂` with the operator 2-norm (largest singular value), which is
/// submultiplicative and therefore bounds `ν` for every stationary stream.
pub fn bound_spectral_norm_upper(p: &Policy, stream: &EnvStream, sampling: Sampling, exec: Execution) -> Result<BoundValue> {
    window_expectation(stream, 1, sampling, exec, |w| step_matrix(p, &w[0]).spectral_norm().ln())
}

/// `E ln⁺ γ_0`, valid for every policy.
pub fn bound_logplus_upper(stream: &EnvStream, sampling: Sampling, exec: Execution) -> Result<BoundValue> {
    window_expectation(stream, 1, sampling, exec, |w| w[0].gamma().ln().max(0.0))
}

/// `E ln(1−λ+λθγ_0)`, which drops the collection term; exact as `θ → 1`.
pub fn bound_nup_lower(p: &Policy, stream: &EnvStream, sampling: Sampling, exec: Execution) -> Result<BoundValue> {
    if !(p.lambda > 0.0 && p.lambda < 1.0 && p.theta > 0.0) {
        return Err(Error::PolicyDomain {
            lambda: p.lambda,
            theta: p.theta,
            reason: "the one-step lower bound needs λ in (0,1) and θ > 0",
        });
    }
    let (l, t) = (p.lambda, p.theta);
    window_expectation(stream, 1, sampling, exec, |w| (1.0 - l + l * t * w[0].gamma()).ln())
}

/// Bounds derived from one of the two scalar recursions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideBounds {
    pub lower_art: BoundValue,
    pub upper_nam1: BoundValue,
    pub upper_nam3: BoundValue,
}

fn side(p: &Policy, stream: &EnvStream, sampling: Sampling, exec: Execution) -> Result<SideBounds> {
    Ok(SideBounds {
        lower_art: bound_art_lower(p, stream, sampling, exec)?,
        upper_nam1: bound_nam1_upper(p, stream, sampling, exec)?,
        upper_nam3: bound_nam3_upper(p, stream, sampling, exec)?,
    })
}

/// `Y`-side bounds: `ζ_n = ε_{n+1}δ_n` and `e_n = ε_{n+1}/ε_n` in place of `γ_n` and `d_n`.
pub fn bounds_dual(p: &Policy, stream: &EnvStream, sampling: Sampling, exec: Execution) -> Result<SideBounds> {
    require(p)?;
    side(&p.swapped(), &dual_stream(stream.clone()), sampling, exec)
}

/// Every bound at one policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub policy: Policy,
    pub primal: SideBounds,
    pub dual: SideBounds,
    /// `E ln μ_0` with the Perron root; see [`bound_ergodic_upper`].
    pub upper_ergodic: BoundValue,
    pub upper_spectral: BoundValue,
    pub upper_logplus: BoundValue,
    pub lower_nup: BoundValue,
}

impl BoundsReport {
    /// Largest lower bound.
    pub fn best_lower(&self) -> BoundValue {
        [self.primal.lower_art, self.dual.lower_art, self.lower_nup]
            .into_iter()
            .fold(BoundValue::exact(f64::NEG_INFINITY), |a, b| if b.value > a.value { b } else { a })
    }

    /// Smallest upper bound.
    pub fn best_upper(&self) -> BoundValue {
        self.named()
            .into_iter()
            .filter(|(n, _)| n.starts_with("upper"))
            .map(|(_, b)| b)
            .fold(BoundValue::exact(f64::INFINITY), |a, b| if b.value < a.value { b } else { a })
    }

    /// `(name, bound)` pairs in a fixed order.
    pub fn named(&self) -> Vec<(&'static str, BoundValue)> {
        vec![
            ("lower_art", self.primal.lower_art),
            ("lower_art_dual", self.dual.lower_art),
            ("lower_nup", self.lower_nup),
            ("upper_nam1", self.primal.upper_nam1),
            ("upper_nam3", self.primal.upper_nam3),
            ("upper_nam1_dual", self.dual.upper_nam1),
            ("upper_nam3_dual", self.dual.upper_nam3),
            ("upper_ergodic", self.upper_ergodic),
            ("upper_spectral", self.upper_spectral),
            ("upper_logplus", self.upper_logplus),
        ]
    }

    /// Whether `est` lies between every lower and every upper bound, allowing
    /// `k` combined standard errors.
    pub fn sandwiches(&self, est: &LyapEstimate, k: f64) -> bool {
        self.violations(est, k).is_empty()
    }

    /// Names of the bounds that `est` falls outside of.
    pub fn violations(&self, est: &LyapEstimate, k: f64) -> Vec<&'static str> {
        let (lo, hi) = match est.cert {
            Certificate::Analytic(_) | Certificate::Exact => est.interval(0.0),
            _ => (est.value, est.value),
        };
        let se = est.cert.stderr();
        self.named()
            .into_iter()
            .filter(|(name, b)| {
                let slack = k * (se * se + b.stderr * b.stderr).sqrt();
                if name.starts_with("lower") {
                    b.value > hi + slack
                } else {
                    b.value < lo - slack
                }
            })
            .map(|(name, _)| name)
            .collect()
    }
}

pub fn bounds_report(p: &Policy, stream: &EnvStream, sampling: Sampling, exec: Execution) -> Result<BoundsReport> {
    require(p)?;
    Ok(BoundsReport {
        policy: *p,
        primal: side(p, stream, sampling, exec)?,
        dual: bounds_dual(p, stream, sampling, exec)?,
        upper_ergodic: bound_ergodic_upper(p, stream, sampling, exec)?,
        upper_spectral: bound_spectral_norm_upper(p, stream, sampling, exec)?,
        upper_logplus: bound_logplus_upper(stream, sampling, exec)?,
        lower_nup: bound_nup_lower(p, stream, sampling, exec)?,
    })
}
