use super::{Certificate, LyapEstimate, Method, Moments2};
use crate::dynamics::{step_matrix, Policy};
use crate::env::{EnvPair, EnvStream};
use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::mat2::Mat2;

/// `T_A(x) = (a11 x + a12)/(a21 x + a22)`, with `T_A(+∞) = a11/a21`.
pub fn moebius_apply(a: &Mat2, x: f64) -> f64 {
    if x.is_infinite() {
        a.get(0, 0) / a.get(1, 0)
    } else {
        (a.get(0, 0) * x + a.get(0, 1)) / (a.get(1, 0) * x + a.get(1, 1))
    }
}

/// `T_{M_{−1}⋯M_{−n}}(+∞)` for a window listed in time order ending at `−1`.
fn ratio_from_window(p: &Policy, window: &[EnvPair]) -> f64 {
    window
        .iter()
        .fold(f64::INFINITY, |x, e| moebius_apply(&step_matrix(p, e), x))
}

/// Settings for [`nu_via_ratio`] and [`stationary_ratio_samples`].
#[derive(Clone, Copy, Debug)]
pub struct RatioOptions {
    pub depth: usize,
    pub samples: usize,
    pub exec: Execution,
}

impl Default for RatioOptions {
    fn default() -> Self {
        RatioOptions {
            depth: 60,
            samples: 200_000,
            exec: Execution::default(),
        }
    }
}

const CHUNK: usize = 1024;

fn chunked<T, F>(stream: &EnvStream, samples: usize, exec: Execution, f: F) -> Vec<Vec<T>>
where
    T: Send,
    F: Fn(&mut EnvStream) -> T + Sync + Send,
{
    let chunks = samples.div_ceil(CHUNK);
    exec.map(chunks, |c| {
        let mut s = stream.fork(c as u64);
        let count = CHUNK.min(samples - c * CHUNK);
        (0..count)
            .map(|_| {
                if !stream.is_iid() {
                    s = s.fork(0);
                }
                f(&mut s)
            })
            .collect()
    })
}

/// Independent draws of `X_0/Y_0 ≈ T_{M_{−1}⋯M_{−(depth+1)}}(+∞)`.
pub fn stationary_ratio_samples(p: &Policy, stream: &EnvStream, opts: &RatioOptions) -> Result<Vec<f64>> {
    p.require_interior("the ratio representation needs an interior policy")?;
    let out = chunked(stream, opts.samples, opts.exec, |s| {
        let w = s.take_pairs(opts.depth + 1);
        ratio_from_window(p, &w)
    });
    Ok(out.into_iter().flatten().collect())
}

/// Monte Carlo of `E ln(1−λ+λθγ_0 + θδ_0/T_{M_{−1}⋯M_{−(depth+1)}}(+∞))`.
pub fn nu_via_ratio(p: &Policy, stream: &EnvStream, opts: &RatioOptions) -> Result<LyapEstimate> {
    p.require_interior("the ratio representation needs an interior policy")?;
    if opts.samples < 2 {
        return Err(invalid("ratio estimator needs at least two samples"));
    }
    let (l, t) = (p.lambda, p.theta);
    let chunks = chunked(stream, opts.samples, opts.exec, |s| {
        let w = s.take_pairs(opts.depth + 2);
        let (past, now) = w.split_at(opts.depth + 1);
        let ratio = ratio_from_window(p, past);
        let e = now[0];
        (1.0 - l + l * t * e.gamma() + t * e.delta / ratio).ln()
    });
    let m = chunks
        .iter()
        .map(|c| {
            let mut m = Moments2::default();
            c.iter().for_each(|&x| m.push(x));
            m
        })
        .fold(Moments2::default(), Moments2::merge);
    let (mean, se) = m.mean_stderr();
    Ok(LyapEstimate {
        value: mean,
        method: Method::Ratio,
        iterations: opts.depth as u64,
        cert: Certificate::StdErr(se),
        seed: Some(stream.seed()),
    })
}
