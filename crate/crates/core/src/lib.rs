//! Growth-rate analysis for the two-asset collector model.
//!
//! A collector holds capital `X_n` and an art collection `Y_n`. Each period a
//! fraction `λ` of capital buys art at rate `ε_n` and a fraction `θ` of the
//! collection is sold at rate `δ_n`, so the state evolves by a random 2×2
//! matrix product. The crate estimates the Lyapunov exponent `ν(λ, θ)` of that
//! product by several independent methods, evaluates analytic bounds and
//! optimizes the policy.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dynamics;
pub mod env;
mod error;
pub mod exec;
pub mod lyapunov;
pub mod mat2;
pub mod meanfield;
pub mod optimize;
pub mod quad;
pub mod special;

pub use dynamics::{CollectorState, Policy};
pub use env::{Atom, BernSpec, EnvPair, EnvStream, GigSpec};
pub use error::{Error, Result};
pub use exec::Execution;
pub use lyapunov::{Certificate, LyapEstimate, Method};
pub use mat2::Mat2;
