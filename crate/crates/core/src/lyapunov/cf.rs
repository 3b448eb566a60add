use super::{mean_stderr, Certificate, LyapEstimate, Method};
use crate::dynamics::{ar_coefficients, ar_y_unchecked, Policy};
use crate::env::{EnvPair, EnvStream, ScalarLaw};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::mat2::Mat2;

/// Which ratio the continued fraction represents: `X_{n+1}/X_n` (`U`) or
/// `Y_{n+1}/Y_n` (`V`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfSide {
    U,
    V,
}

/// Constants of the geometric bias bound `C0·h^{n+1}/(1−h)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertCF {
    pub c0: f64,
    pub h0: f64,
    /// Sharper rate available for i.i.d. pairs.
    pub h: Option<f64>,
}

impl CertCF {
    pub fn rate(&self) -> f64 {
        self.h.unwrap_or(self.h0)
    }

    /// Bound on `E ln u_depth − ν`.
    pub fn bound(&self, depth: usize) -> f64 {
        let r = self.rate();
        self.c0 * r.powi(depth as i32 + 1) / (1.0 - r)
    }
}

fn require_cf_policy(p: &Policy) -> Result<()> {
    if p.lambda * p.theta <= 0.0 {
        return Err(Error::PolicyDomain {
            lambda: p.lambda,
            theta: p.theta,
            reason: "continued fractions need λθ > 0",
        });
    }
    p.require_interior("continued fractions need an interior policy")
}

/// Rate `h` for i.i.d. pairs: `E((1−λ)/(1−λ+λθγ_0))²` when `λ ≤ θ`, else
/// with `1−θ` in place of `1−λ`.
pub fn cf_rate_iid(p: &Policy, law: &ScalarLaw) -> Result<f64> {
    let (l, t) = (p.lambda, p.theta);
    let a = if l <= t { 1.0 - l } else { 1.0 - t };
    law.expect(|g| (a / (a + l * t * g)).powi(2))
}

/// Bias certificate for the continued-fraction estimator at `depth`.
///
/// `c` must exceed every rate and its reciprocal. Passing the i.i.d. rate
/// from [`cf_rate_iid`] tightens the bound.
pub fn cf_certificate(p: &Policy, c: f64, depth: usize, side: CfSide, h_iid: Option<f64>) -> Result<(CertCF, f64)> {
    require_cf_policy(p)?;
    if !(c > 1.0) || !c.is_finite() {
        return Err(invalid(format!("certificate needs a finite bound C > 1, got {c}")));
    }
    let (l, t) = (p.lambda, p.theta);
    let c2 = c * c;
    let c0 = match side {
        CfSide::U => c2 * (1.0 - l + (1.0 - t + l * t) * c2) / (1.0 - l + l * t / c2),
        CfSide::V => c2 * (1.0 - t + (1.0 - l + l * t) * c2) / (1.0 - t + l * t / c2),
    };
    let a = if l <= t { 1.0 - l } else { 1.0 - t };
    let h0 = (a / (a + l * t / c2)).powi(2);
    let cert = CertCF { c0, h0, h: h_iid };
    Ok((cert, cert.bound(depth)))
}

fn companion(pn: f64, qn: f64) -> Mat2 {
    Mat2::new(pn, qn, 1.0, 0.0)
}

/// Coefficients at time `−k` from a window whose last entry is time 0.
fn coefficients(p: &Policy, w: &[EnvPair], k: usize, side: CfSide) -> (f64, f64) {
    let i = w.len() - 1 - k;
    let (now, before) = (w[i], w[i - 1]);
    match side {
        CfSide::U => ar_coefficients(p, now.gamma(), now.delta / before.delta),
        CfSide::V => ar_y_unchecked(p, now.epsilon * before.delta, now.epsilon / before.epsilon),
    }
}

/// `u_0, …, u_n` (or `v_0, …, v_n`) along one window of `n+2` draws ending at time 0.
pub fn cf_paths(p: &Policy, window: &[EnvPair], side: CfSide) -> Result<Vec<f64>> {
    require_cf_policy(p)?;
    if window.len() < 2 {
        return Err(invalid("continued fractions need a window of at least two draws"));
    }
    let n = window.len() - 2;
    let mut out = Vec::with_capacity(n + 1);
    let mut prod = Mat2::IDENTITY;
    for k in 0..=n {
        let (pk, qk) = coefficients(p, window, k, side);
        prod = prod * companion(pk, qk);
        let s = prod.0.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        prod = prod.scale(1.0 / s);
        out.push(prod.get(0, 0) / prod.get(1, 0));
    }
    Ok(out)
}

/// Settings for [`nu_cf`] and [`nu_cf_dual`].
#[derive(Clone, Copy, Debug)]
pub struct CfOptions {
    pub depth: usize,
    pub replications: usize,
    pub exec: Execution,
}

impl Default for CfOptions {
    fn default() -> Self {
        CfOptions {
            depth: 60,
            replications: 100_000,
            exec: Execution::default(),
        }
    }
}

fn nu_cf_side(p: &Policy, stream: &EnvStream, opts: &CfOptions, side: CfSide) -> Result<LyapEstimate> {
    require_cf_policy(p)?;
    if !stream.is_finite_support() {
        return Err(Error::UnboundedSupport);
    }
    if opts.replications < 2 {
        return Err(invalid("continued fractions need at least two replications"));
    }
    let h = if stream.is_iid() {
        Some(cf_rate_iid(p, &ScalarLaw::gamma0(stream)?)?)
    } else {
        None
    };
    let (_, bias) = cf_certificate(p, stream.bound_c(), opts.depth, side, h)?;
    let chunk = 1024;
    let chunks = opts.replications.div_ceil(chunk);
    let per_chunk = opts.exec.map(chunks, |c| {
        let mut s = stream.fork(c as u64);
        let count = chunk.min(opts.replications - c * chunk);
        (0..count)
            .map(|_| {
                if !stream.is_iid() {
                    // Consecutive windows of a dependent stream are correlated.
                    s = s.fork(0);
                }
                let w = s.take_pairs(opts.depth + 2);
                let path = cf_paths(p, &w, side).expect("policy checked above");
                path[opts.depth].ln()
            })
            .collect::<Vec<f64>>()
    });
    let samples: Vec<f64> = per_chunk.into_iter().flatten().collect();
    let (mean, se) = mean_stderr(&samples);
    Ok(LyapEstimate {
        value: mean,
        method: match side {
            CfSide::U => Method::Cf,
            CfSide::V => Method::CfDual,
        },
        iterations: opts.depth as u64,
        cert: Certificate::OneSided { stderr: se, bias },
        seed: Some(stream.seed()),
    })
}

/// Monte Carlo mean of `ln u_depth` with the one-sided bias certificate.
pub fn nu_cf(p: &Policy, stream: &EnvStream, opts: &CfOptions) -> Result<LyapEstimate> {
    nu_cf_side(p, stream, opts, CfSide::U)
}

/// The `Y`-side estimator built from `v_depth`.
pub fn nu_cf_dual(p: &Policy, stream: &EnvStream, opts: &CfOptions) -> Result<LyapEstimate> {
    nu_cf_side(p, stream, opts, CfSide::V)
}
