//! Gauss-Markov processes of Ornstein-Uhlenbeck type written as space-time
//! scaled stationary Ornstein-Uhlenbeck processes.
//!
//! A process solving
//!
//! ```text
//! dZ_t = (φ'(t)/φ(t) Z_t + ψ(t)) dt + σ(t) dB_t,   Z_0 = ξ,   t ∈ [0, T)
//! ```
//!
//! has centered part `Z̃_t = v(t) R(β(t))` where `R` is the stationary OU
//! process with covariance `e^{-|a-b|/2}`, `Q(t) = ∫₀ᵗ σ²/φ²`, `β = ln Q` and
//! `v = φ √Q`.
//!
//! Modules:
//! - [`process`]: the SDE family, its moments and the time-change map.
//! - [`families`]: closed-form bridge families and two counterexample kernels.
//! - [`representation`]: representability checks on specs and bare kernels.
//! - [`simulation`]: Monte Carlo path generators and estimators.
//! - [`suploc`]: first-passage densities and the supremum-location density
//!   of the stationary OU process, plus the reduction for standardized
//!   processes.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod families;
pub mod process;
pub mod quad;
pub mod representation;
pub mod simulation;
pub mod special;
pub mod suploc;

pub use error::{Error, Result};
pub use process::{
    covariance, solve_mean, stationary_ou_cov, CovarianceKernel, Func, Horizon, ProcessSpec,
    QLimit, TimeChangeMap,
};
