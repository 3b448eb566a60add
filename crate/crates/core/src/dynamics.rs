//! The state recursion `(X_{n+1}, Y_{n+1}) = M_n (X_n, Y_n)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::env::{EnvPair, EnvStream};
use crate::error::{invalid, Error, Result};
use crate::mat2::Mat2;

/// Step matrices are plain 2×2 matrices.
pub type StepMatrix = Mat2;

/// Rescale to unit max-norm every this many steps.
pub const RENORM_EVERY: usize = 64;

/// Investment fraction `lambda` and liquidation fraction `theta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub lambda: f64,
    pub theta: f64,
}

impl Policy {
    pub fn new(lambda: f64, theta: f64) -> Result<Self> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(lambda) || !unit(theta) {
            return Err(invalid(format!("policy fractions must lie in [0,1], got ({lambda}, {theta})")));
        }
        if lambda + theta <= 0.0 {
            return Err(Error::PolicyDomain {
                lambda,
                theta,
                reason: "λ = θ = 0 is the trivial policy",
            });
        }
        Ok(Policy { lambda, theta })
    }

    /// Both fractions strictly inside (0, 1).
    pub fn is_interior(&self) -> bool {
        self.lambda > 0.0 && self.lambda < 1.0 && self.theta > 0.0 && self.theta < 1.0
    }

    pub fn on_boundary(&self) -> bool {
        !self.is_interior()
    }

    pub fn swapped(&self) -> Policy {
        Policy {
            lambda: self.theta,
            theta: self.lambda,
        }
    }

    pub(crate) fn require_interior(&self, what: &'static str) -> Result<()> {
        if self.is_interior() {
            Ok(())
        } else {
            Err(Error::PolicyDomain {
                lambda: self.lambda,
                theta: self.theta,
                reason: what,
            })
        }
    }
}

/// Capital `x` and collection value `y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectorState {
    pub x: f64,
    pub y: f64,
}

impl CollectorState {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite()) || x + y <= 0.0 {
            return Err(invalid(format!("state must be nonnegative and nonzero, got ({x}, {y})")));
        }
        Ok(CollectorState { x, y })
    }

    pub fn as_vec(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn max_norm(&self) -> f64 {
        self.x.max(self.y)
    }
}

/// `M_n = [[1−λ+λθεδ, θδ], [λ(1−θ)ε, 1−θ]]`.
#[inline]
pub fn step_matrix(p: &Policy, e: &EnvPair) -> StepMatrix {
    let (l, t) = (p.lambda, p.theta);
    Mat2::new(
        1.0 - l + l * t * e.epsilon * e.delta,
        t * e.delta,
        l * (1.0 - t) * e.epsilon,
        1.0 - t,
    )
}

/// The sell and buy stages, with `sell · buy = step_matrix`.
pub fn factor_matrices(p: &Policy, e: &EnvPair) -> (StepMatrix, StepMatrix) {
    let sell = Mat2::new(p.theta * e.delta, 1.0, 1.0 - p.theta, 0.0);
    let buy = Mat2::new(p.lambda * e.epsilon, 1.0, 1.0 - p.lambda, 0.0);
    (sell, buy)
}

/// Intermediate quantities of one period, in order of the flow.
///
/// Buying first: capital `x1 = (1−λ)X` is kept and art worth `λεX` is bought,
/// giving collection `y1 = Y + λεX`. Selling then liquidates `θ·y1`, giving
/// `X' = x1 + θδ·y1` and `Y' = (1−θ)·y1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flow {
    pub kept_capital: f64,
    pub collection_after_buy: f64,
    pub x_next: f64,
    pub y_next: f64,
}

pub fn period_flow(p: &Policy, e: &EnvPair, s: &CollectorState) -> Flow {
    let kept = (1.0 - p.lambda) * s.x;
    let y1 = s.y + p.lambda * e.epsilon * s.x;
    Flow {
        kept_capital: kept,
        collection_after_buy: y1,
        x_next: kept + p.theta * e.delta * y1,
        y_next: (1.0 - p.theta) * y1,
    }
}

/// A trajectory stored in log scale.
///
/// `log_x[k]` and `log_y[k]` are `ln X_k`, `ln Y_k` (−∞ when the component
/// is zero). `state` is the final state divided by `exp(offset)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogTrajectory {
    pub log_x: Vec<f64>,
    pub log_y: Vec<f64>,
    pub pairs: Vec<EnvPair>,
    pub offset: f64,
    pub state: CollectorState,
}

impl LogTrajectory {
    pub fn steps(&self) -> usize {
        self.pairs.len()
    }

    /// `ln X_{k+1} − ln X_k` for each step.
    pub fn increments_x(&self) -> Vec<f64> {
        self.log_x.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn increments_y(&self) -> Vec<f64> {
        self.log_y.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Final unnormalized state (may overflow for long runs).
    pub fn unnormalized(&self) -> [f64; 2] {
        let s = self.offset.exp();
        [self.state.x * s, self.state.y * s]
    }

    /// CSV with columns `step,logX,logY,epsilon,delta`; the pair columns hold
    /// the draw applied at that step (empty on the last row).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,logX,logY,epsilon,delta")?;
        for k in 0..self.log_x.len() {
            match self.pairs.get(k) {
                Some(e) => writeln!(w, "{k},{},{},{},{}", self.log_x[k], self.log_y[k], e.epsilon, e.delta)?,
                None => writeln!(w, "{k},{},{},,", self.log_x[k], self.log_y[k])?,
            }
        }
        Ok(())
    }
}

/// Applies a sequence of matrices with periodic renormalization.
fn run_matrices<I>(mats: I, s0: CollectorState, n: usize, pairs: Vec<EnvPair>) -> Result<LogTrajectory>
where
    I: Iterator<Item = Mat2>,
{
    let mut v = s0.as_vec();
    let mut offset = 0.0;
    let mut log_x = Vec::with_capacity(n + 1);
    let mut log_y = Vec::with_capacity(n + 1);
    log_x.push(v[0].ln());
    log_y.push(v[1].ln());
    for (k, m) in mats.take(n).enumerate() {
        v = m.apply(v);
        if v[0] <= 0.0 && v[1] <= 0.0 {
            return Err(Error::StateCollapse { step: k + 1 });
        }
        if (k + 1) % RENORM_EVERY == 0 {
            let s = v[0].max(v[1]);
            v = [v[0] / s, v[1] / s];
            offset += s.ln();
        }
        log_x.push(v[0].ln() + offset);
        log_y.push(v[1].ln() + offset);
    }
    Ok(LogTrajectory {
        log_x,
        log_y,
        pairs,
        offset,
        state: CollectorState { x: v[0], y: v[1] },
    })
}

/// Iterates `n` steps on the given draws (`pairs[k]` drives step `k`).
pub fn iterate_pairs(p: &Policy, pairs: &[EnvPair], s0: CollectorState) -> Result<LogTrajectory> {
    let n = pairs.len();
    if n == 0 {
        return Err(invalid("iterate needs at least one step"));
    }
    run_matrices(pairs.iter().map(|e| step_matrix(p, e)), s0, n, pairs.to_vec())
}

/// Iterates `n` steps drawing from `stream`.
pub fn iterate(p: &Policy, stream: &mut EnvStream, s0: CollectorState, n: usize) -> Result<LogTrajectory> {
    let pairs = stream.take_pairs(n);
    iterate_pairs(p, &pairs, s0)
}

/// Tilde matrix acting on `(Ỹ, X̃)`:
/// `[[1−θ+λθδ_nε_{n+1}, λε_{n+1}], [(1−λ)θδ_n, 1−λ]]`.
pub fn dual_step_matrix(p: &Policy, delta_n: f64, eps_next: f64) -> Mat2 {
    let (l, t) = (p.lambda, p.theta);
    Mat2::new(
        1.0 - t + l * t * delta_n * eps_next,
        l * eps_next,
        (1.0 - l) * t * delta_n,
        1.0 - l,
    )
}

/// Runs the dual system on `pairs` (`n+1` draws give `n` steps).
///
/// The returned trajectory stores `ln X̃_k` in `log_x` and `ln Ỹ_k` in `log_y`,
/// with `X̃_0 = (1−λ)X_0`, `Ỹ_0 = Y_0 + λε_0X_0`; they satisfy
/// `X̃_k = (1−λ)X_k` and `Ỹ_k = Y_{k+1}/(1−θ)`.
pub fn dual_iterate_pairs(p: &Policy, pairs: &[EnvPair], s0: CollectorState) -> Result<LogTrajectory> {
    if p.theta >= 1.0 {
        return Err(Error::PolicyDomain {
            lambda: p.lambda,
            theta: p.theta,
            reason: "the dual system needs θ < 1",
        });
    }
    if pairs.len() < 2 {
        return Err(invalid("dual iteration needs at least two draws"));
    }
    let n = pairs.len() - 1;
    let x0 = (1.0 - p.lambda) * s0.x;
    let y0 = s0.y + p.lambda * pairs[0].epsilon * s0.x;
    // Internally the vector is (Ỹ, X̃); swap on the way out.
    let start = CollectorState { x: y0, y: x0 };
    if y0 + x0 <= 0.0 {
        return Err(Error::StateCollapse { step: 0 });
    }
    let mats = (0..n).map(|k| dual_step_matrix(p, pairs[k].delta, pairs[k + 1].epsilon));
    let t = run_matrices(mats, start, n, pairs[..n].to_vec())?;
    Ok(LogTrajectory {
        log_x: t.log_y,
        log_y: t.log_x,
        pairs: t.pairs,
        offset: t.offset,
        state: CollectorState {
            x: t.state.y,
            y: t.state.x,
        },
    })
}

/// Dual iteration drawing `n+1` pairs from `stream`.
pub fn dual_iterate(p: &Policy, stream: &mut EnvStream, s0: CollectorState, n: usize) -> Result<LogTrajectory> {
    let pairs = stream.take_pairs(n + 1);
    dual_iterate_pairs(p, &pairs, s0)
}

/// `(p_n, q_n)` of `X_{n+1} = p_n X_n + q_n X_{n−1}`.
#[inline]
pub fn ar_coefficients(p: &Policy, gamma_n: f64, d_n: f64) -> (f64, f64) {
    let (l, t) = (p.lambda, p.theta);
    (
        1.0 - l + l * t * gamma_n + (1.0 - t) * d_n,
        -(1.0 - l) * (1.0 - t) * d_n,
    )
}

/// `(r_n, s_n)` of `Y_{n+1} = r_n Y_n + s_n Y_{n−1}`.
pub fn ar_coefficients_y(p: &Policy, zeta_n: f64, e_n: f64) -> Result<(f64, f64)> {
    if p.theta >= 1.0 {
        return Err(Error::PolicyDomain {
            lambda: p.lambda,
            theta: p.theta,
            reason: "Y vanishes identically when θ = 1",
        });
    }
    Ok(ar_y_unchecked(p, zeta_n, e_n))
}

#[inline]
pub(crate) fn ar_y_unchecked(p: &Policy, zeta_n: f64, e_n: f64) -> (f64, f64) {
    let (l, t) = (p.lambda, p.theta);
    (
        1.0 - t + l * t * zeta_n + (1.0 - l) * e_n,
        -(1.0 - l) * (1.0 - t) * e_n,
    )
}

/// Companion matrix `[[p, q], [1, 0]]` of the scalar recursion.
pub fn companion(pn: f64, qn: f64) -> Mat2 {
    Mat2::new(pn, qn, 1.0, 0.0)
}
