use super::{Certificate, LyapEstimate, Method};
use crate::dynamics::Policy;
use crate::env::{EnvStream, ScalarLaw};
use crate::error::{Error, Result};

/// `ν` on the edge of the policy square by closed forms.
///
/// * `λ = 0` or `θ = 0`: exactly 0.
/// * `θ = 1`: `E ln(1−λ+λγ_0)`.
/// * `λ = 1`: `E ln(1−θ+θζ_0)` with `ζ_0 = ε_1δ_0`.
///
/// Finite laws give exact sums; gamma margins use nested quadrature.
pub fn nu_boundary(p: &Policy, stream: &EnvStream) -> Result<LyapEstimate> {
    let (l, t) = (p.lambda, p.theta);
    if p.is_interior() {
        return Err(Error::PolicyDomain {
            lambda: l,
            theta: t,
            reason: "closed forms hold only on the boundary",
        });
    }
    if l == 0.0 || t == 0.0 {
        return Ok(LyapEstimate::exact(0.0, Method::Boundary));
    }
    let law = if t == 1.0 {
        ScalarLaw::gamma0(stream)?
    } else {
        ScalarLaw::zeta0(stream)?
    };
    let c = if t == 1.0 { l } else { t };
    let value = law.expect(|g| (1.0 - c + c * g).ln())?;
    let cert = if law.is_exact() {
        Certificate::Exact
    } else {
        Certificate::Analytic(1e-9 * value.abs().max(1e-3))
    };
    Ok(LyapEstimate {
        value,
        method: Method::Boundary,
        iterations: 1,
        cert,
        seed: None,
    })
}
