//! Diagonal policies `λ = θ` for gamma-distributed pairs.
//!
//! With `ε_0 ~ f_{h,2/r}`, `δ_0 ~ f_{h,2/s}` independent, the exponent on the
//! diagonal is `E ln(1−λ+λ²ε_0δ_0+λδ_0ξ)` where `ξ ~ g_{−h, r/λ, s(1−λ)/λ}` is
//! independent of `(ε_0, δ_0)`. For `r = s` it also has a one-dimensional
//! integral form with a Bessel normalizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Certificate, LyapEstimate, Method, Moments2};
use crate::env::dist::{gamma_sample, GigSampler};
use crate::env::GigSpec;
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::quad::{integrate_with, QuadOptions};
use crate::special::ln_bessel_k;

/// Monte Carlo value and, for `r = s`, the quadrature value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GigDiagonal {
    pub mc: LyapEstimate,
    pub quadrature: Option<LyapEstimate>,
}

impl GigDiagonal {
    /// Whether the two evaluations agree within `k` Monte Carlo stderr plus
    /// the quadrature error. `None` when no quadrature is available.
    pub fn agrees(&self, k: f64) -> Option<bool> {
        self.quadrature.map(|q| {
            let tol = k * self.mc.cert.stderr() + q.cert.value();
            (self.mc.value - q.value).abs() <= tol
        })
    }

    /// The sharper of the two values.
    pub fn best(&self) -> LyapEstimate {
        self.quadrature.unwrap_or(self.mc)
    }
}

const CHUNK: usize = 4096;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("diagonal formula needs λ in (0,1), got {lambda}")))
    }
}

/// `ν(λ, λ)` by Monte Carlo over `mc_budget` draws; adds the quadrature when `r = s`.
pub fn nu_gig_diagonal(g: &GigSpec, lambda: f64, mc_budget: usize, seed: u64, exec: Execution) -> Result<GigDiagonal> {
    check_lambda(lambda)?;
    if mc_budget < 2 {
        return Err(invalid("diagonal Monte Carlo needs at least two draws"));
    }
    let (h, r, s) = (g.shape_h, g.rate_r, g.rate_s);
    let sampler = GigSampler::new(-h, r / lambda, s * (1.0 - lambda) / lambda)?;
    let chunks = mc_budget.div_ceil(CHUNK);
    let parts = exec.map(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let count = CHUNK.min(mc_budget - c * CHUNK);
        let mut m = Moments2::default();
        for _ in 0..count {
            let eps = gamma_sample(h, g.eps_scale(), &mut rng);
            let delta = gamma_sample(h, g.delta_scale(), &mut rng);
            let xi = sampler.sample(&mut rng);
            m.push((1.0 - lambda + lambda * lambda * eps * delta + lambda * delta * xi).ln());
        }
        m
    });
    let (mean, se) = parts.into_iter().fold(Moments2::default(), Moments2::merge).mean_stderr();
    let mc = LyapEstimate {
        value: mean,
        method: Method::Gig,
        iterations: mc_budget as u64,
        cert: Certificate::StdErr(se),
        seed: Some(seed),
    };
    let quadrature = if r == s {
        Some(gig_diagonal_quadrature(h, s, lambda)?)
    } else {
        None
    };
    Ok(GigDiagonal { mc, quadrature })
}

/// `(1−λ)^{−h/2}/K_{|h|}(s√(1−λ)/λ) · ∫ x^{h−1} exp(−(sx/λ + s(1−λ)/(λx))/2) ln x dx`,
/// integrated in `u = ln x`.
pub fn gig_diagonal_quadrature(h: f64, s: f64, lambda: f64) -> Result<LyapEstimate> {
    check_lambda(lambda)?;
    if !(h > 0.0 && s > 0.0) {
        return Err(invalid(format!("diagonal quadrature needs h, s > 0, got h={h}, s={s}")));
    }
    let c = s / (2.0 * lambda);
    let ln_pref = -0.5 * h * (1.0 - lambda).ln() - ln_bessel_k(h, s * (1.0 - lambda).sqrt() / lambda)?;
    let phi = |u: f64| h * u - c * (u.exp() + (1.0 - lambda) * (-u).exp());
    // Peak of φ: c·y² − h·y − c(1−λ) = 0 with y = e^u.
    let y = (h + (h * h + 4.0 * c * c * (1.0 - lambda)).sqrt()) / (2.0 * c);
    let u0 = y.ln();
    let top = phi(u0);
    let reach = |dir: f64| {
        let mut w = 1.0;
        while phi(u0 + dir * w) > top - 60.0 {
            w *= 1.5;
        }
        u0 + dir * w
    };
    let (lo, hi) = (reach(-1.0), reach(1.0));
    let scale = (ln_pref + top).exp();
    let r = integrate_with(
        |u| (phi(u) - top).exp() * u,
        lo,
        hi,
        QuadOptions {
            abs_tol: 1e-16,
            rel_tol: 1e-12,
            ..QuadOptions::default()
        },
    );
    if !r.converged {
        return Err(Error::Quadrature(format!(
            "diagonal integral at λ={lambda}: estimate {} with error {}",
            r.value * scale,
            r.error * scale
        )));
    }
    let value = r.value * scale;
    // Quadrature error plus the relative error of the Bessel normalizer.
    let err = r.error * scale + value.abs() * 1e-8;
    Ok(LyapEstimate {
        value,
        method: Method::GigQuadrature,
        iterations: 1,
        cert: Certificate::Analytic(err),
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_edges() {
        let g = GigSpec::new(4.5, 8.0, 8.0).unwrap();
        assert!(nu_gig_diagonal(&g, 0.0, 100, 1, Execution::Sequential).is_err());
        assert!(nu_gig_diagonal(&g, 1.0, 100, 1, Execution::Sequential).is_err());
        assert!(gig_diagonal_quadrature(4.5, 8.0, 1.0).is_err());
    }

    #[test]
    fn no_quadrature_without_equal_rates() {
        let g = GigSpec::new(2.0, 4.0, 6.0).unwrap();
        let d = nu_gig_diagonal(&g, 0.4, 2000, 3, Execution::Sequential).unwrap();
        assert!(d.quadrature.is_none());
        assert!(d.agrees(3.0).is_none());
    }
}
