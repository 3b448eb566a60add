//! Projective transfer operator `(Tf)(x) = Σ_ℓ p_ℓ f(A_ℓ•x)`.
//!
//! With `F(x) = Σ_j p_j ln(‖A_j x‖/‖x‖)`, the iterates
//! `ν_k = (T^k F)(x̄)` converge to `ν` geometrically, and
//! `|ν_n − ν| ≤ ϑ^n/(1−ϑ) · Σ_ℓ p_ℓ h(x̄, A_ℓ•x̄)` where `ϑ = Σ_ℓ p_ℓ τ(A_ℓ)`
//! and `h` is the Hilbert projective metric.
//!
//! Top levels of the branch tree are evaluated exactly on the set of reached
//! directions. Deeper levels use `T^m F` tabulated on a direction grid with
//! linear interpolation; the grid error is estimated by a refined rerun and
//! added to the certificate.

use serde::{Deserialize, Serialize};

use super::{Certificate, LyapEstimate, Method};
use crate::dynamics::{step_matrix, Policy};
use crate::env::Atom;
use crate::error::{invalid, Error, Result};
use crate::mat2::Mat2;

/// A direction in the open positive quadrant, stored with unit coordinate sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjPoint([f64; 2]);

impl ProjPoint {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        if !(x1 > 0.0 && x2 > 0.0 && x1.is_finite() && x2.is_finite()) {
            return Err(invalid(format!("projective point needs positive coordinates, got ({x1}, {x2})")));
        }
        let s = x1 + x2;
        Ok(ProjPoint([x1 / s, x2 / s]))
    }

    pub fn coords(&self) -> [f64; 2] {
        self.0
    }

    /// First coordinate after normalization, in (0, 1).
    pub fn t(&self) -> f64 {
        self.0[0]
    }

    pub fn apply(&self, a: &Mat2) -> ProjPoint {
        let v = a.apply(self.0);
        let s = v[0] + v[1];
        ProjPoint([v[0] / s, v[1] / s])
    }
}

/// Hilbert projective distance `|ln(x1 y2/(x2 y1))|`.
pub fn hilbert_distance(x: &ProjPoint, y: &ProjPoint) -> f64 {
    ((x.0[0] * y.0[1]) / (x.0[1] * y.0[0])).ln().abs()
}

/// Birkhoff contraction coefficient `τ = (1−√ψ)/(1+√ψ)`, where `ψ` is the
/// smallest cross ratio `A(i,k)A(m,n)/(A(i,n)A(m,k))`.
pub fn birkhoff_tau(a: &Mat2) -> Result<f64> {
    if !a.is_positive() {
        return Err(invalid(format!("Birkhoff coefficient needs positive entries, got {a:?}")));
    }
    let mut psi = f64::INFINITY;
    for i in 0..2 {
        for m in 0..2 {
            for k in 0..2 {
                for n in 0..2 {
                    let r = a.get(i, k) * a.get(m, n) / (a.get(i, n) * a.get(m, k));
                    psi = psi.min(r);
                }
            }
        }
    }
    let s = psi.sqrt();
    Ok((1.0 - s) / (1.0 + s))
}

/// `ϑ = Σ_ℓ p_ℓ τ(M_ℓ)` over the atoms.
pub fn vartheta(p: &Policy, atoms: &[Atom]) -> Result<f64> {
    atoms
        .iter()
        .map(|a| birkhoff_tau(&step_matrix(p, &a.pair)).map(|t| a.prob * t))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    Max,
    Sum,
}

impl Norm {
    #[inline]
    fn of(&self, v: [f64; 2]) -> f64 {
        match self {
            Norm::Max => v[0].max(v[1]),
            Norm::Sum => v[0] + v[1],
        }
    }
}

/// Settings for [`nu_transfer`].
#[derive(Clone, Copy, Debug)]
pub struct TransferOptions {
    pub n_iter: usize,
    pub norm: Norm,
    /// Direction-grid size.
    pub grid: usize,
    /// Largest exact level, in points.
    pub cap: usize,
    pub x_bar: [f64; 2],
    /// Rerun on a refined grid to estimate interpolation error.
    pub estimate_interp_error: bool,
    /// Stop early once `|ν_k − ν_{k−1}| < rel_tol·|ν_k|`.
    pub stop_rel_tol: Option<f64>,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions {
            n_iter: 40,
            norm: Norm::Max,
            grid: 4096,
            cap: 1_000_000,
            x_bar: [1.0, 1.0],
            estimate_interp_error: true,
            stop_rel_tol: None,
        }
    }
}

impl TransferOptions {
    /// Cheap configuration for grid sweeps: small exact tree, stopping rule on.
    pub fn sweep(rel_tol: f64) -> Self {
        TransferOptions {
            n_iter: 400,
            cap: 64,
            estimate_interp_error: false,
            stop_rel_tol: Some(rel_tol),
            ..Self::default()
        }
    }
}

/// Output of [`nu_transfer`].
#[derive(Clone, Debug, PartialEq)]
pub struct TransferReport {
    pub estimate: LyapEstimate,
    pub vartheta: f64,
    /// `ϑ^n/(1−ϑ) · Σ_ℓ p_ℓ h(x̄, A_ℓ•x̄)`.
    pub contraction_bound: f64,
    pub interp_error: f64,
    /// `ν_0, …, ν_n`.
    pub trace: Vec<f64>,
    /// Deepest level evaluated without interpolation.
    pub exact_depth: usize,
    /// False when a stopping rule was requested and not met.
    pub converged: bool,
}

struct Operator {
    mats: Vec<Mat2>,
    probs: Vec<f64>,
    norm: Norm,
}

impl Operator {
    #[inline]
    fn image(&self, l: usize, t: f64) -> f64 {
        let v = self.mats[l].apply([t, 1.0 - t]);
        v[0] / (v[0] + v[1])
    }

    #[inline]
    fn f(&self, t: f64) -> f64 {
        let x = [t, 1.0 - t];
        let nx = self.norm.of(x);
        self.mats
            .iter()
            .zip(&self.probs)
            .map(|(a, p)| p * (self.norm.of(a.apply(x)) / nx).ln())
            .sum()
    }
}

/// Linear interpolation stencil on a uniform grid.
#[derive(Clone, Copy)]
struct Stencil {
    j: usize,
    w: f64,
}

struct Grid {
    lo: f64,
    step: f64,
    n: usize,
}

impl Grid {
    fn node(&self, i: usize) -> f64 {
        self.lo + self.step * i as f64
    }

    fn stencil(&self, t: f64) -> Stencil {
        let u = ((t - self.lo) / self.step).clamp(0.0, (self.n - 1) as f64);
        let j = (u.floor() as usize).min(self.n - 2);
        Stencil { j, w: u - j as f64 }
    }
}

#[inline]
fn lerp(g: &[f64], s: Stencil) -> f64 {
    g[s.j] + s.w * (g[s.j + 1] - g[s.j])
}

/// Iterates `T` on the grid and evaluates `Σ_{x∈level} w·(T^m F)(x)` for
/// `m = 1..=steps`, optionally stopping early.
fn grid_phase(
    op: &Operator,
    level: &[(f64, f64)],
    lo: f64,
    hi: f64,
    n: usize,
    steps: usize,
    prev: f64,
    stop: Option<f64>,
) -> Vec<f64> {
    let grid = Grid {
        lo,
        step: (hi - lo) / (n - 1) as f64,
        n,
    };
    let b = op.mats.len();
    let stencils: Vec<Stencil> = (0..n)
        .flat_map(|i| {
            let t = grid.node(i);
            (0..b).map(move |l| (l, t))
        })
        .map(|(l, t)| grid.stencil(op.image(l, t)))
        .collect();
    let level_st: Vec<(Stencil, f64)> = level.iter().map(|&(t, w)| (grid.stencil(t), w)).collect();
    let mut g: Vec<f64> = (0..n).map(|i| op.f(grid.node(i))).collect();
    let mut next = vec![0.0; n];
    let mut out = Vec::with_capacity(steps);
    let mut last = prev;
    for _ in 0..steps {
        for i in 0..n {
            let mut acc = 0.0;
            for l in 0..b {
                acc += op.probs[l] * lerp(&g, stencils[i * b + l]);
            }
            next[i] = acc;
        }
        std::mem::swap(&mut g, &mut next);
        let v: f64 = level_st.iter().map(|&(s, w)| w * lerp(&g, s)).sum();
        out.push(v);
        if let Some(tol) = stop {
            if (v - last).abs() < tol * v.abs() {
                break;
            }
        }
        last = v;
    }
    out
}

fn next_level(op: &Operator, level: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(level.len() * op.mats.len());
    for &(t, w) in level {
        for (l, p) in op.probs.iter().enumerate() {
            out.push((op.image(l, t), w * p));
        }
    }
    // Merge coincident directions.
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(out.len());
    for (t, w) in out {
        match merged.last_mut() {
            Some(last) if last.0 == t => last.1 += w,
            _ => merged.push((t, w)),
        }
    }
    merged
}

/// `ν_n = Σ_j p_j (T^n f_j)(x̄)` with its Birkhoff certificate.
pub fn nu_transfer(p: &Policy, atoms: &[Atom], opts: &TransferOptions) -> Result<TransferReport> {
    if atoms.is_empty() {
        return Err(Error::NeedsFiniteSupport);
    }
    if opts.grid < 3 || opts.cap < 1 {
        return Err(invalid("transfer operator needs grid ≥ 3 and cap ≥ 1"));
    }
    let mats: Vec<Mat2> = atoms.iter().map(|a| step_matrix(p, &a.pair)).collect();
    if !mats.iter().all(Mat2::is_positive) {
        return Err(Error::PolicyDomain {
            lambda: p.lambda,
            theta: p.theta,
            reason: "transfer operator needs entry-wise positive step matrices",
        });
    }
    let op = Operator {
        mats,
        probs: atoms.iter().map(|a| a.prob).collect(),
        norm: opts.norm,
    };
    let x_bar = ProjPoint::new(opts.x_bar[0], opts.x_bar[1])?;
    let theta_c = vartheta(p, atoms)?;
    let spread: f64 = op
        .mats
        .iter()
        .zip(&op.probs)
        .map(|(a, pr)| pr * hilbert_distance(&x_bar, &x_bar.apply(a)))
        .sum();

    let converged_at = |trace: &[f64]| -> bool {
        match opts.stop_rel_tol {
            None => false,
            Some(tol) => {
                let k = trace.len();
                k >= 2 && (trace[k - 1] - trace[k - 2]).abs() < tol * trace[k - 1].abs()
            }
        }
    };

    // Exact levels.
    let mut level = vec![(x_bar.t(), 1.0)];
    let mut trace = vec![op.f(x_bar.t())];
    let mut stopped = false;
    while trace.len() <= opts.n_iter {
        if level.len() * op.mats.len() > opts.cap && trace.len() > 1 {
            break;
        }
        level = next_level(&op, &level);
        trace.push(level.iter().map(|&(t, w)| w * op.f(t)).sum());
        if converged_at(&trace) {
            stopped = true;
            break;
        }
    }
    let exact_depth = trace.len() - 1;

    let mut interp_error = 0.0;
    if !stopped && exact_depth < opts.n_iter {
        let (mut lo, mut hi) = (1.0f64, 0.0f64);
        for a in &op.mats {
            for t in [0.0, 1.0] {
                let s = {
                    let v = a.apply([t, 1.0 - t]);
                    v[0] / (v[0] + v[1])
                };
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        let steps = opts.n_iter - exact_depth;
        let tail = grid_phase(&op, &level, lo, hi, opts.grid, steps, trace[exact_depth], opts.stop_rel_tol);
        stopped = opts.stop_rel_tol.is_some() && tail.len() < steps;
        if !stopped && opts.stop_rel_tol.is_some() {
            // The last step may also have met the rule.
            let mut t2 = trace.clone();
            t2.extend_from_slice(&tail);
            stopped = converged_at(&t2);
        }
        if opts.estimate_interp_error {
            let fine = grid_phase(&op, &level, lo, hi, 2 * opts.grid - 1, tail.len(), trace[exact_depth], None);
            interp_error = 2.0 * (tail[tail.len() - 1] - fine[fine.len() - 1]).abs();
        }
        trace.extend(tail);
    }
    let n = trace.len() - 1;
    let contraction_bound = theta_c.powi(n as i32) / (1.0 - theta_c) * spread;
    let value = trace[n];
    Ok(TransferReport {
        estimate: LyapEstimate {
            value,
            method: Method::Transfer,
            iterations: n.max(1) as u64,
            cert: Certificate::Analytic(contraction_bound + interp_error),
            seed: None,
        },
        vartheta: theta_c,
        contraction_bound,
        interp_error,
        trace,
        exact_depth,
        converged: opts.stop_rel_tol.is_none() || stopped,
    })
}
