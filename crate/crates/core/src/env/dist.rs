//! Gamma and generalized inverse Gaussian laws.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{invalid, Result};
use crate::quad::integrate;
use crate::special::{ln_bessel_k, ln_gamma};

/// Draws from the gamma law with shape `h` and scale `a` (mean `h·a`).
pub fn gamma_sample<R: Rng + ?Sized>(h: f64, scale_a: f64, rng: &mut R) -> f64 {
    Gamma::new(h, scale_a)
        .expect("gamma parameters must be positive")
        .sample(rng)
}

/// Log-density of the gamma law `f_{h,a}`.
pub fn gamma_log_density(h: f64, a: f64, x: f64) -> f64 {
    (h - 1.0) * x.ln() - x / a - ln_gamma(h) - h * a.ln()
}

/// `E φ(X)` for `X ~ f_{h,a}`, integrated in `ln x` over a window that
/// leaves less than `e^{-40}` of mass outside.
pub fn gamma_expect<F: Fn(f64) -> f64>(h: f64, a: f64, phi: F, rel_tol: f64) -> Result<f64> {
    let lo = -45.0 / h - 5.0;
    let hi = (h + 60.0 + 10.0 * h.sqrt()).ln() + 1.0;
    let c = -ln_gamma(h);
    let f = |l: f64| {
        let u = l.exp();
        (h * l - u + c).exp() * phi(a * u)
    };
    integrate(f, lo, hi, 1e-300, rel_tol)
}

/// Log-density of the GIG law `g_{h,a,b}(x) ∝ x^{h−1} exp(−(ax + b/x)/2)`.
pub fn gig_log_density(h: f64, a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && x > 0.0) {
        return Err(invalid(format!("gig density needs a, b, x > 0 (a={a}, b={b}, x={x})")));
    }
    let ln_norm = 0.5 * h * (a / b).ln() - std::f64::consts::LN_2 - ln_bessel_k(h.abs(), (a * b).sqrt())?;
    Ok(ln_norm + (h - 1.0) * x.ln() - 0.5 * (a * x + b / x))
}

/// CDF of `g_{h,a,b}` by quadrature.
pub fn gig_cdf(h: f64, a: f64, b: f64, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let ln_norm = gig_log_density(h, a, b, 1.0)? + 0.5 * (a + b);
    let f = |l: f64| {
        let u = l.exp();
        (ln_norm + h * l - 0.5 * (a * u + b / u)).exp()
    };
    let lo = gig_mass_floor(h, a, b);
    if x.ln() <= lo {
        return Ok(0.0);
    }
    integrate(f, lo, x.ln(), 1e-15, 1e-11).map(|v| v.min(1.0))
}

fn gig_mass_floor(h: f64, a: f64, b: f64) -> f64 {
    // Below this point the exp(−b/(2x)) factor kills the density.
    let mode = gig_mode(h, a, b);
    let mut l = mode.ln() - 1.0;
    let ln_at = |l: f64| (h - 1.0) * l - 0.5 * (a * l.exp() + b * (-l).exp());
    let top = ln_at(mode.ln());
    while ln_at(l) > top - 60.0 && l > -700.0 {
        l -= 1.0;
    }
    l
}

/// Mode of `g_{h,a,b}`.
pub fn gig_mode(h: f64, a: f64, b: f64) -> f64 {
    ((h - 1.0) + ((h - 1.0).powi(2) + a * b).sqrt()) / a
}

/// Ratio-of-uniforms sampler for `g_{h,a,b}` with a mode-shifted rectangle.
///
/// `X = √(b/a)·Y` where `Y` has density proportional to
/// `y^{λ−1} exp(−ω(y+1/y)/2)`, `ω = √(ab)`, `λ = |h|`; negative `h` uses
/// `1/Y`. The bounding rectangle is located numerically once per sampler.
#[derive(Clone, Debug)]
pub struct GigSampler {
    lambda: f64,
    omega: f64,
    scale: f64,
    invert: bool,
    mode: f64,
    ln_f_mode: f64,
    v_minus: f64,
    v_plus: f64,
}

impl GigSampler {
    pub fn new(h: f64, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && h.is_finite()) {
            return Err(invalid(format!("gig sampler needs a, b > 0 (h={h}, a={a}, b={b})")));
        }
        let lambda = h.abs();
        let omega = (a * b).sqrt();
        let mode = ((lambda - 1.0) + ((lambda - 1.0).powi(2) + omega * omega).sqrt()) / omega;
        let mut s = GigSampler {
            lambda,
            omega,
            scale: (b / a).sqrt(),
            invert: h < 0.0,
            mode,
            ln_f_mode: 0.0,
            v_minus: 0.0,
            v_plus: 0.0,
        };
        s.ln_f_mode = s.ln_f_raw(mode);
        let (vm, vp) = s.rectangle();
        s.v_minus = vm * (1.0 + 1e-6);
        s.v_plus = vp * (1.0 + 1e-6);
        Ok(s)
    }

    fn ln_f_raw(&self, y: f64) -> f64 {
        (self.lambda - 1.0) * y.ln() - 0.5 * self.omega * (y + 1.0 / y)
    }

    fn ln_f(&self, y: f64) -> f64 {
        self.ln_f_raw(y) - self.ln_f_mode
    }

    /// Extremes of `(y − m)·√f(y)` on each side of the mode.
    fn rectangle(&self) -> (f64, f64) {
        let m = self.mode;
        let right = |y: f64| (y - m).ln() + 0.5 * self.ln_f(y);
        let left = |y: f64| (m - y).ln() + 0.5 * self.ln_f(y);
        let mut hi = 2.0 * m + 1.0;
        while right(hi) > right(0.5 * (m + hi)) - 1e-12 || right(hi).is_nan() {
            hi *= 2.0;
        }
        let vp = max_on(&right, m, hi).exp();
        let vm = -max_on(&left, 0.0, m).exp();
        (vm, vp)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = 1.0 - rng.random::<f64>();
            let v = self.v_minus + (self.v_plus - self.v_minus) * rng.random::<f64>();
            let y = v / u + self.mode;
            if y <= 0.0 {
                continue;
            }
            if 2.0 * u.ln() <= self.ln_f(y) {
                let y = if self.invert { 1.0 / y } else { y };
                return self.scale * y;
            }
        }
    }
}

/// Maximum of a function on `(lo, hi)` by a log-spaced scan refined with
/// golden-section search.
fn max_on<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    let n = 400;
    let width = hi - lo;
    let mut best_i = 1;
    let mut best = f64::NEG_INFINITY;
    let pt = |i: usize| lo + width * (i as f64 / n as f64);
    for i in 1..n {
        let v = f(pt(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (mut a, mut b) = (pt(best_i - 1), pt(best_i + 1));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..200 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
    }
    best.max(f(0.5 * (a + b)))
}

/// Draws from `g_{h,a,b}` (builds a sampler per call; reuse [`GigSampler`] in loops).
pub fn gig_sample<R: Rng + ?Sized>(h: f64, a: f64, b: f64, rng: &mut R) -> Result<f64> {
    Ok(GigSampler::new(h, a, b)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_expectations_by_quadrature() {
        let (h, a) = (4.5, 0.25);
        let m1 = gamma_expect(h, a, |x| x, 1e-12).unwrap();
        let m2 = gamma_expect(h, a, |x| x * x, 1e-12).unwrap();
        assert!((m1 - h * a).abs() < 1e-10);
        assert!((m2 - h * (h + 1.0) * a * a).abs() < 1e-10);
        let l = gamma_expect(h, a, f64::ln, 1e-12).unwrap();
        assert!((l - (digamma_ref(h) + a.ln())).abs() < 1e-10);
    }

    fn digamma_ref(h: f64) -> f64 {
        crate::special::digamma(h)
    }

    #[test]
    fn gig_density_normalized() {
        for &(h, a, b) in &[(-4.5, 8.0 / 0.69, 8.0 * 0.31 / 0.69), (0.5, 1.0, 2.0), (2.0, 0.3, 5.0)] {
            let total = gig_cdf(h, a, b, 1e6).unwrap();
            assert!((total - 1.0).abs() < 1e-6, "{h} {a} {b}: {total}");
        }
    }

    #[test]
    fn gig_reciprocal_relation() {
        let (h, a, b) = (1.3, 2.0, 0.7);
        for &x in &[0.1, 0.5, 1.0, 3.0, 9.0] {
            let lhs = gig_log_density(h, a, b, x).unwrap();
            let rhs = gig_log_density(-h, b, a, 1.0 / x).unwrap() - 2.0 * x.ln();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn gig_sample_mean_matches_quadrature() {
        let (h, a, b) = (-4.5, 8.0 / 0.69, 8.0 * 0.31 / 0.69);
        let s = GigSampler::new(h, a, b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let ln0 = gig_log_density(h, a, b, 1.0).unwrap() + 0.5 * (a + b);
        let exact = integrate(
            |l: f64| {
                let u = l.exp();
                u * (ln0 + h * l - 0.5 * (a * u + b / u)).exp()
            },
            -30.0,
            10.0,
            1e-15,
            1e-12,
        )
        .unwrap();
        assert!((mean - exact).abs() < 4.0 * (var / n as f64).sqrt(), "{mean} vs {exact}");
    }
}
