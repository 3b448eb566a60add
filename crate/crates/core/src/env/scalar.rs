//! Laws of scalar functionals of the environment, such as `γ_0 = ε_0δ_0`.

use super::dist::gamma_expect;
use super::EnvStream;
use crate::error::{Error, Result};

/// A positive scalar random variable with computable expectations.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarLaw {
    /// `(value, probability)` pairs.
    Atoms(Vec<(f64, f64)>),
    /// Product of independent gamma variables with shape `h` and the given scales.
    GammaProduct { h: f64, scale1: f64, scale2: f64 },
}

impl ScalarLaw {
    /// Law of `γ_0 = ε_0 δ_0`.
    pub fn gamma0(stream: &EnvStream) -> Result<Self> {
        if let Some(g) = stream.gamma_spec() {
            return Ok(ScalarLaw::GammaProduct {
                h: g.shape_h,
                scale1: g.eps_scale(),
                scale2: g.delta_scale(),
            });
        }
        let w = stream.windows(1)?;
        Ok(Self::merged(w.iter().map(|(p, q)| (p[0].gamma(), *q))))
    }

    /// Law of `ζ_0 = ε_1 δ_0`.
    pub fn zeta0(stream: &EnvStream) -> Result<Self> {
        if stream.gamma_spec().is_some() {
            return Self::gamma0(stream);
        }
        let w = stream.windows(2)?;
        Ok(Self::merged(w.iter().map(|(p, q)| (p[1].epsilon * p[0].delta, *q))))
    }

    fn merged(it: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut v: Vec<(f64, f64)> = it.collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (x, p) in v {
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 += p,
                _ => out.push((x, p)),
            }
        }
        ScalarLaw::Atoms(out)
    }

    /// `E φ(X)`; exact sums for atoms, nested quadrature for gamma products.
    pub fn expect<F: Fn(f64) -> f64>(&self, phi: F) -> Result<f64> {
        match self {
            ScalarLaw::Atoms(a) => Ok(a.iter().map(|&(x, p)| p * phi(x)).sum()),
            ScalarLaw::GammaProduct { h, scale1, scale2 } => {
                let failed = std::cell::Cell::new(false);
                let inner = |x: f64| match gamma_expect(*h, *scale2, |y| phi(x * y), 1e-12) {
                    Ok(v) => v,
                    Err(_) => {
                        failed.set(true);
                        0.0
                    }
                };
                let v = gamma_expect(*h, *scale1, inner, 1e-11)?;
                if failed.get() {
                    return Err(Error::Quadrature("inner gamma expectation".into()));
                }
                Ok(v)
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ScalarLaw::Atoms(_))
    }

    pub fn mean(&self) -> Result<f64> {
        self.expect(|x| x)
    }
}
