//! Modified Bessel function of the second kind and gamma-function helpers.
//!
//! `bessel_k` uses the cosine integral
//! `K_h(x) = Γ(h+½)(2x)^h/√π · ∫₀^∞ cos t (t²+x²)^{−h−½} dt`,
//! summed over half-periods with an averaged alternating tail. The integral
//! `∫₀^∞ exp(−x cosh t) cosh(ht) dt` is an independent second route and backs
//! `ln_bessel_k` where the cosine route loses precision.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, integrate_with, QuadOptions};

pub use statrs::function::gamma::{digamma, ln_gamma};

/// Relative accuracy promised by [`bessel_k`].
pub const BESSEL_REL_TOL: f64 = 1e-8;

/// Value and estimated relative error of the cosine-integral evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineK {
    pub value: f64,
    pub rel_error: f64,
}

fn half_period_piece(order: f64, x: f64, k: usize, scale: f64) -> f64 {
    let p = order + 0.5;
    let x2 = x * x;
    let f = |t: f64| t.cos() * (t * t + x2).powf(-p);
    let (a, b) = if k == 0 {
        (0.0, FRAC_PI_2)
    } else {
        ((k as f64 - 0.5) * PI, (k as f64 + 0.5) * PI)
    };
    let opts = QuadOptions {
        abs_tol: 1e-19 * scale,
        rel_tol: 1e-14,
        max_panels: 2000,
    };
    integrate_with(f, a, b, opts).value
}

/// Repeated pairwise averaging of the trailing partial sums.
fn averaged_limit(partial: &[f64], m: usize) -> f64 {
    let mut level: Vec<f64> = partial[partial.len() - m..].to_vec();
    while level.len() > 1 {
        level = level.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    level[0]
}

/// Evaluates `K_order(x)` by the cosine integral and reports its error.
pub fn bessel_k_cosine(order: f64, x: f64) -> Result<CosineK> {
    let h = order.abs();
    if !(x > 0.0) || !x.is_finite() || !h.is_finite() {
        return Err(invalid(format!("bessel_k needs x > 0, got order {order}, x {x}")));
    }
    let scale = x.powf(-2.0 * h - 1.0);
    let ln_pref = ln_gamma(h + 0.5) + h * (2.0 * x).ln() - 0.5 * PI.ln();
    let m = 24;
    let mut n_pieces = ((4.0 * x / PI).ceil() as usize + 48).max(64);
    let mut pieces: Vec<f64> = Vec::new();
    loop {
        while pieces.len() < n_pieces {
            let k = pieces.len();
            pieces.push(half_period_piece(h, x, k, scale));
        }
        let mut partial = Vec::with_capacity(pieces.len());
        let mut s = 0.0;
        let mut abs_sum = 0.0;
        for p in &pieces {
            s += p;
            abs_sum += p.abs();
            partial.push(s);
        }
        let est = averaged_limit(&partial, m);
        let est_prev = averaged_limit(&partial[..partial.len() - 8], m);
        let tail_err = (est - est_prev).abs();
        let round_err = 1e-15 * abs_sum;
        let rel = (tail_err + round_err) / est.abs();
        if est > 0.0 && rel <= BESSEL_REL_TOL {
            return Ok(CosineK {
                value: (ln_pref + est.ln()).exp(),
                rel_error: rel,
            });
        }
        if n_pieces >= 16384 || round_err > BESSEL_REL_TOL * est.abs() {
            return Ok(CosineK {
                value: if est > 0.0 { (ln_pref + est.ln()).exp() } else { f64::NAN },
                rel_error: if est > 0.0 { rel } else { f64::INFINITY },
            });
        }
        n_pieces *= 2;
    }
}

/// `K_order(x)` with relative error at most [`BESSEL_REL_TOL`].
///
/// The order enters through `|order|`. Arguments for which the cosine
/// integral cannot certify that accuracy return [`Error::Quadrature`].
pub fn bessel_k(order: f64, x: f64) -> Result<f64> {
    let r = bessel_k_cosine(order, x)?;
    if r.rel_error <= BESSEL_REL_TOL {
        Ok(r.value)
    } else {
        Err(Error::Quadrature(format!(
            "cosine integral for K_{order}({x}) reached relative error {:e}",
            r.rel_error
        )))
    }
}

/// `ln K_order(x)` from `∫₀^∞ exp(−x cosh t) cosh(ht) dt`, stable for large `x`.
pub fn ln_bessel_k_cosh(order: f64, x: f64) -> Result<f64> {
    let h = order.abs();
    if !(x > 0.0) || !x.is_finite() || !h.is_finite() {
        return Err(invalid(format!("bessel_k needs x > 0, got order {order}, x {x}")));
    }
    // Exponent relative to e^{−x}: −x(cosh t − 1) + ln cosh(ht).
    let g = |t: f64| {
        let ch = if t < 1e-4 { 0.5 * t * t * (1.0 + t * t / 12.0) } else { t.cosh() - 1.0 };
        -x * ch + h * t + (0.5 * (1.0 + (-2.0 * h * t).exp())).ln()
    };
    let mut t_end = 1.0;
    let mut gmax = g(0.0);
    loop {
        let steps = 256;
        for i in 0..=steps {
            gmax = gmax.max(g(t_end * i as f64 / steps as f64));
        }
        if g(t_end) < gmax - 60.0 {
            break;
        }
        t_end *= 2.0;
        if t_end > 1e4 {
            return Err(Error::Quadrature(format!("cosh integral for K_{order}({x}) has no decay")));
        }
    }
    let v = integrate(|t| (g(t) - gmax).exp(), 0.0, t_end, 1e-300, 1e-13)?;
    Ok(-x + gmax + v.ln())
}

/// `ln K_order(x)`, by the cosine route when it certifies, otherwise the cosh route.
pub fn ln_bessel_k(order: f64, x: f64) -> Result<f64> {
    match bessel_k_cosine(order, x) {
        Ok(r) if r.rel_error <= BESSEL_REL_TOL && r.value.is_normal() => Ok(r.value.ln()),
        _ => ln_bessel_k_cosh(order, x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k_half(x: f64) -> f64 {
        (PI / (2.0 * x)).sqrt() * (-x).exp()
    }

    #[test]
    fn half_order_closed_form() {
        for &x in &[0.05, 0.3, 1.0, 2.5, 6.0] {
            let v = bessel_k(0.5, x).unwrap();
            assert!((v / k_half(x) - 1.0).abs() < 1e-8, "x={x}: {v} vs {}", k_half(x));
        }
    }

    #[test]
    fn three_halves_closed_form() {
        let x = 1.7;
        let exact = k_half(x) * (1.0 + 1.0 / x);
        assert!((bessel_k(1.5, x).unwrap() / exact - 1.0).abs() < 1e-8);
        assert!((ln_bessel_k_cosh(1.5, x).unwrap() - exact.ln()).abs() < 1e-10);
    }

    #[test]
    fn negative_order_maps_to_absolute_value() {
        assert_eq!(bessel_k(-4.5, 2.0).unwrap(), bessel_k(4.5, 2.0).unwrap());
    }

    #[test]
    fn routes_agree() {
        for &(h, x) in &[(0.0, 0.7), (0.25, 3.0), (2.0, 1.1), (4.5, 6.455), (7.3, 0.4)] {
            let a = bessel_k(h, x).unwrap().ln();
            let b = ln_bessel_k_cosh(h, x).unwrap();
            assert!((a - b).abs() < 1e-8, "h={h} x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn large_argument_falls_back() {
        let x = 200.0;
        let exact = k_half(x).ln();
        assert!((ln_bessel_k(0.5, x).unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn rejects_nonpositive_argument() {
        assert!(bessel_k(1.0, 0.0).is_err());
        assert!(bessel_k(1.0, -2.0).is_err());
    }
}
