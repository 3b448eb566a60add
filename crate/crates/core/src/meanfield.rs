//! Expected dynamics `(U_n, V_n) = (E X_n, E Y_n)` under independent draws.

use serde::{Deserialize, Serialize};

use crate::dynamics::Policy;
use crate::env::Moments;
use crate::error::{invalid, Error, Result};
use crate::mat2::Mat2;

/// `alpha = E ε`, `beta = E δ`, `gamma = E εδ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl MeanSpec {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && gamma > 0.0) {
            return Err(invalid(format!("mean spec needs positive entries, got ({alpha}, {beta}, {gamma})")));
        }
        Ok(MeanSpec { alpha, beta, gamma })
    }

    /// Independent margins: `γ = αβ`.
    pub fn independent(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, alpha * beta)
    }

    pub fn from_moments(m: &Moments) -> Result<Self> {
        Self::new(m.alpha, m.beta, m.gamma)
    }
}

/// `M = E M_n = [[1−λ+αβλθ, βθ], [αλ(1−θ), 1−θ]]`.
pub fn mean_matrix(p: &Policy, m: &MeanSpec) -> Mat2 {
    let (l, t) = (p.lambda, p.theta);
    Mat2::new(
        1.0 - l + m.alpha * m.beta * l * t,
        m.beta * t,
        m.alpha * l * (1.0 - t),
        1.0 - t,
    )
}

/// Top eigenvalue of the mean matrix when `γ = αβ`.
pub fn mu(p: &Policy, gamma: f64) -> f64 {
    let (l, t) = (p.lambda, p.theta);
    let disc = if gamma >= 1.0 {
        (l + t - gamma * l * t).powi(2) + 4.0 * (gamma - 1.0) * l * t
    } else {
        (t - l + l * t * gamma).powi(2) + 4.0 * l * t * (1.0 - t) * gamma
    };
    0.5 * (2.0 - l - t + gamma * l * t + disc.sqrt())
}

/// Top eigenvalue of the mean matrix with `γ = E εδ` and `αβ` given separately.
pub fn mu_general(p: &Policy, gamma: f64, alpha_beta: f64) -> f64 {
    let (l, t) = (p.lambda, p.theta);
    let disc = (t - l + l * t * gamma).powi(2) + 4.0 * l * t * (1.0 - t) * alpha_beta;
    0.5 * (2.0 - l - t + gamma * l * t + disc.sqrt())
}

/// `∂μ/∂λ` in closed form.
pub fn dmu_dlambda(p: &Policy, gamma: f64) -> f64 {
    let (l, t) = (p.lambda, p.theta);
    let a = l + t - gamma * l * t;
    let root = (a * a + 4.0 * (gamma - 1.0) * l * t).sqrt();
    0.5 * (gamma * t - 1.0 + ((1.0 - gamma * t) * a + 2.0 * (gamma - 1.0) * t) / root)
}

/// `∂μ/∂θ`, by the symmetry `μ(λ, θ) = μ(θ, λ)`.
pub fn dmu_dtheta(p: &Policy, gamma: f64) -> f64 {
    dmu_dlambda(&p.swapped(), gamma)
}

/// Signs (−1, 0 or 1) of `(∂μ/∂λ, ∂μ/∂θ)` at an interior point.
pub fn mu_gradient_signs(p: &Policy, gamma: f64) -> Result<(i8, i8)> {
    if p.lambda * p.theta == 0.0 || p.theta >= 1.0 {
        return Err(Error::PolicyDomain {
            lambda: p.lambda,
            theta: p.theta,
            reason: "gradient signs need λθ ≠ 0 and θ ≠ 1",
        });
    }
    let sign = |v: f64| {
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    Ok((sign(dmu_dlambda(p, gamma)), sign(dmu_dtheta(p, gamma))))
}

/// `n` iterates of the mean matrix from `(u0, v0)`, including the start.
pub fn mean_trajectory(p: &Policy, m: &MeanSpec, u0: f64, v0: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if !(u0 >= 0.0 && v0 >= 0.0 && u0 + v0 > 0.0) {
        return Err(invalid(format!("mean start needs U0, V0 ≥ 0 with positive sum, got ({u0}, {v0})")));
    }
    let mm = mean_matrix(p, m);
    let mut out = Vec::with_capacity(n + 1);
    let mut v = [u0, v0];
    out.push((v[0], v[1]));
    for _ in 0..n {
        v = mm.apply(v);
        out.push((v[0], v[1]));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotonicity {
    /// Both sequences stay put.
    Constant,
    /// `U_n` increases and `V_n` decreases.
    CapitalRises,
    /// `U_n` decreases and `V_n` increases.
    CollectionRises,
}

/// Limits of the mean dynamics at `γ = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaOneLimits {
    pub u_inf: f64,
    pub v_inf: f64,
    pub monotonicity: Monotonicity,
}

/// Closed-form limits when `γ = αβ = 1`; `αU_n + V_n` is conserved.
pub fn gamma_one_limits(p: &Policy, m: &MeanSpec, u0: f64, v0: f64) -> Result<GammaOneLimits> {
    if (m.gamma - 1.0).abs() > 1e-12 || (m.alpha * m.beta - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("γ = 1 limits need αβ = γ = 1, got γ = {}", m.gamma)));
    }
    let (l, t) = (p.lambda, p.theta);
    let den = t + l * (1.0 - t);
    let u_inf = t * (u0 + m.beta * v0) / den;
    let v_inf = l * (1.0 - t) * (m.alpha * u0 + v0) / den;
    let monotonicity = if t >= 1.0 || u0 == 0.0 {
        // Threshold is +∞ (or undefined): λ lies below it.
        if v0 == 0.0 && t >= 1.0 {
            Monotonicity::Constant
        } else {
            Monotonicity::CapitalRises
        }
    } else {
        let threshold = m.beta * t * v0 / ((1.0 - t) * u0);
        if (l - threshold).abs() <= 1e-12 * threshold.abs().max(l) {
            Monotonicity::Constant
        } else if l < threshold {
            Monotonicity::CapitalRises
        } else {
            Monotonicity::CollectionRises
        }
    };
    Ok(GammaOneLimits {
        u_inf,
        v_inf,
        monotonicity,
    })
}

/// `μ ≈ 1 + ξλθ/(λ+θ−λθ)` for `γ = 1 + ξ`.
pub fn mu_first_order(p: &Policy, xi: f64) -> Result<f64> {
    let (l, t) = (p.lambda, p.theta);
    let den = l + t - l * t;
    if den <= 0.0 {
        return Err(invalid("first-order expansion needs λ+θ−λθ > 0"));
    }
    Ok(1.0 + xi * l * t / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pol(l: f64, t: f64) -> Policy {
        Policy::new(l, t).unwrap()
    }

    #[test]
    fn boundary_values() {
        let g = 1.37;
        assert!((mu(&pol(0.0, 0.4), g) - 1.0).abs() < 1e-15);
        assert!((mu(&pol(0.4, 0.0), g) - 1.0).abs() < 1e-15);
        assert!((mu(&pol(1.0, 0.3), g) - (0.7 + 0.3 * g)).abs() < 1e-14);
        assert!((mu(&pol(0.3, 1.0), g) - (0.7 + 0.3 * g)).abs() < 1e-14);
        assert!((mu(&pol(0.6, 0.2), 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn corner_mean_matrix() {
        let m = MeanSpec::independent(1.5, 0.8).unwrap();
        assert_eq!(mean_matrix(&pol(1.0, 1.0), &m), Mat2::new(1.5 * 0.8, 0.8, 0.0, 0.0));
    }

    #[test]
    fn gradient_signs_follow_gamma() {
        assert_eq!(mu_gradient_signs(&pol(0.4, 0.6), 1.5).unwrap(), (1, 1));
        assert_eq!(mu_gradient_signs(&pol(0.4, 0.6), 0.5).unwrap(), (-1, -1));
        assert!(mu_gradient_signs(&pol(0.4, 1.0), 1.5).is_err());
    }

    #[test]
    fn boundary_mean_trajectories() {
        let m = MeanSpec::independent(1.3, 0.9).unwrap();
        let (u0, v0) = (2.0, 3.0);
        let l = 0.35;
        let tr = mean_trajectory(&pol(l, 0.0), &m, u0, v0, 30).unwrap();
        for (n, &(u, v)) in tr.iter().enumerate() {
            let q = (1.0 - l).powi(n as i32);
            assert!((u - q * u0).abs() < 1e-12);
            assert!((v - (m.alpha * (1.0 - q) * u0 + v0)).abs() < 1e-12);
        }
        let tr = mean_trajectory(&pol(0.0, 0.4), &m, u0, v0, 400).unwrap();
        assert!((tr[400].0 - (u0 + m.beta * v0)).abs() < 1e-10);
        let g = m.gamma;
        let tr = mean_trajectory(&pol(l, 1.0), &m, u0, v0, 12).unwrap();
        for n in 1..12 {
            let r = 1.0 - l + g * l;
            let expect = r.powi(n as i32) * u0 + r.powi(n as i32 - 1) * m.beta * v0;
            assert!((tr[n].0 - expect).abs() < 1e-12 * expect);
            assert_eq!(tr[n].1, 0.0);
        }
    }

    #[test]
    fn gamma_one_razor_edge_is_constant() {
        let m = MeanSpec::independent(2.0, 0.5).unwrap();
        let (t, u0, v0) = (0.3, 1.0, 2.0);
        let l = m.beta * t * v0 / ((1.0 - t) * u0);
        let r = gamma_one_limits(&pol(l, t), &m, u0, v0).unwrap();
        assert_eq!(r.monotonicity, Monotonicity::Constant);
        assert!((r.u_inf - u0).abs() < 1e-12 && (r.v_inf - v0).abs() < 1e-12);
        assert!(gamma_one_limits(&pol(l, t), &MeanSpec::independent(2.0, 0.6).unwrap(), u0, v0).is_err());
    }

    #[test]
    fn first_order_corner() {
        assert_eq!(mu_first_order(&pol(1.0, 1.0), 0.2).unwrap(), 1.2);
        assert_eq!(mu_first_order(&pol(0.3, 0.6), 0.0).unwrap(), 1.0);
    }
}
