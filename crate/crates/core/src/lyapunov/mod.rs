//! Estimators of the Lyapunov exponent `ν(λ, θ)`.
//!
//! | method     | applies to                    | certificate                   |
//! |------------|-------------------------------|-------------------------------|
//! | direct     | any stream, interior policy   | stderr over replications      |
//! | boundary   | policies on the edge of Ω     | exact (or quadrature error)   |
//! | cf         | bounded support, λθ > 0       | stderr + one-sided bias bound |
//! | ratio      | interior policy               | stderr                        |
//! | transfer   | finite i.i.d. support         | Birkhoff contraction bound    |
//! | gig        | gamma margins, λ = θ          | stderr / quadrature error     |

mod boundary;
mod cf;
mod direct;
mod gig;
mod ratio;
mod transfer;

use serde::{Deserialize, Serialize};

pub use boundary::nu_boundary;
pub use cf::{cf_certificate, cf_paths, cf_rate_iid, nu_cf, nu_cf_dual, CertCF, CfOptions, CfSide};
pub use direct::{nu_direct, DirectOptions};
pub use gig::{gig_diagonal_quadrature, nu_gig_diagonal, GigDiagonal};
pub use ratio::{moebius_apply, nu_via_ratio, stationary_ratio_samples, RatioOptions};
pub use transfer::{
    birkhoff_tau, hilbert_distance, nu_transfer, vartheta, Norm, ProjPoint, TransferOptions, TransferReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Boundary,
    Cf,
    CfDual,
    Transfer,
    Ratio,
    Gig,
    GigQuadrature,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Boundary => "boundary",
            Method::Cf => "cf",
            Method::CfDual => "cf_dual",
            Method::Transfer => "transfer",
            Method::Ratio => "ratio",
            Method::Gig => "gig",
            Method::GigQuadrature => "gig_quadrature",
        }
    }
}

/// Error statement attached to an estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Certificate {
    /// Closed form evaluated by exact sums.
    Exact,
    /// Standard error of a Monte Carlo mean.
    StdErr(f64),
    /// Deterministic bound on `|value − ν|`.
    Analytic(f64),
    /// Monte Carlo mean of a quantity whose expectation exceeds `ν` by at
    /// most `bias` (and by a positive amount).
    OneSided { stderr: f64, bias: f64 },
    None,
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::Exact => "exact",
            Certificate::StdErr(_) => "stderr",
            Certificate::Analytic(_) => "analytic",
            Certificate::OneSided { .. } => "one_sided",
            Certificate::None => "none",
        }
    }

    /// Headline number: stderr, bound, or bias (zero for exact).
    pub fn value(&self) -> f64 {
        match *self {
            Certificate::Exact => 0.0,
            Certificate::StdErr(s) => s,
            Certificate::Analytic(b) => b,
            Certificate::OneSided { bias, .. } => bias,
            Certificate::None => f64::NAN,
        }
    }

    pub fn stderr(&self) -> f64 {
        match *self {
            Certificate::StdErr(s) | Certificate::OneSided { stderr: s, .. } => s,
            _ => 0.0,
        }
    }
}

/// A value of `ν` with its method, work count and certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapEstimate {
    pub value: f64,
    pub method: Method,
    pub iterations: u64,
    pub cert: Certificate,
    pub seed: Option<u64>,
}

impl LyapEstimate {
    pub(crate) fn exact(value: f64, method: Method) -> Self {
        LyapEstimate {
            value,
            method,
            iterations: 1,
            cert: Certificate::Exact,
            seed: None,
        }
    }

    /// Interval that contains `ν` when statistical errors are within `k` stderr.
    pub fn interval(&self, k: f64) -> (f64, f64) {
        let v = self.value;
        match self.cert {
            Certificate::Exact => (v, v),
            Certificate::StdErr(s) => (v - k * s, v + k * s),
            Certificate::Analytic(b) => (v - b, v + b),
            Certificate::OneSided { stderr, bias } => (v - bias - k * stderr, v + k * stderr),
            Certificate::None => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Whether the `k`-stderr intervals of two estimates overlap.
    pub fn consistent_with(&self, other: &LyapEstimate, k: f64) -> bool {
        let (a0, a1) = self.interval(k);
        let (b0, b1) = other.interval(k);
        a0 <= b1 && b0 <= a1
    }
}

/// Mean and standard error of a sample.
pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Accumulated sum and sum of squares, merged across parallel chunks.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Moments2 {
    pub n: u64,
    pub sum: f64,
    pub sumsq: f64,
}

impl Moments2 {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sumsq += x * x;
    }

    pub fn merge(a: Moments2, b: Moments2) -> Moments2 {
        Moments2 {
            n: a.n + b.n,
            sum: a.sum + b.sum,
            sumsq: a.sumsq + b.sumsq,
        }
    }

    pub fn mean_stderr(&self) -> (f64, f64) {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = ((self.sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }
}
