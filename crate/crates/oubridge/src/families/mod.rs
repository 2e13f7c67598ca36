//! Closed-form constructors for the bridge families and the two
//! counterexample kernels.
//!
//! | key                    | φ(t)                              | σ(t)     | Q(t)                         |
//! |------------------------|-----------------------------------|----------|------------------------------|
//! | `alpha-wiener`         | (1 − t/T)^α                       | 1        | closed form                  |
//! | `general-alpha-wiener` | exp(−∫₀ᵗ α(u)/(T−u) du)           | 1        | quadrature                   |
//! | `ou-bridge`            | γ(t,T) e^{q̄(t)} / γ(0,T)          | σ(t)     | e^{−2q̄}γ(0,t)γ(0,T)/γ(t,T)   |
//! | `f-wiener`             | 1 − F                             | √f       | F/(1 − F)                    |
//! | `weighted`             | w or w(1 − t)                     | w        | t or t/(1 − t)               |
//! | `zero-area`, `glued`   | kernel only                       |          |                              |

mod alpha;
mod counterexample;
mod f_wiener;
mod ou_bridge;
mod registry;
mod weighted;

pub use alpha::{
    alpha_wiener_spec, boundedness_epsilon, general_alpha_spec, AlphaWienerParams,
    GeneralAlphaBound, GeneralAlphaParams,
};
pub use counterexample::{counterexample_kernel, CounterexampleKernel, CounterexampleKind};
pub use f_wiener::{f_wiener_spec, FWienerParams};
pub use ou_bridge::{ou_bridge_kernel, ou_bridge_mean, OuBridgeParams};
pub use registry::{build_family, parse_func, FAMILY_KEYS};
pub use weighted::{weighted_spec, WeightParams};

use crate::process::{CovarianceKernel, ProcessSpec, TimeChangeMap};

/// Everything a family constructor produces.
#[derive(Debug, Clone)]
pub struct Family {
    pub name: String,
    /// The SDE coefficients, absent for kernel-only counterexamples.
    pub spec: Option<ProcessSpec>,
    pub kernel: CovarianceKernel,
    pub maps: Option<TimeChangeMap>,
    /// Exponent ε for which `φ Q^{1/2+ε}` is bounded, when known.
    pub epsilon: Option<f64>,
    /// Analytic `lim_{t↑T} φ(t) Q(t)^{1/2+ε}`, when known.
    pub bound_limit: Option<f64>,
    /// Whether the kernel and maps are analytic (no quadrature involved).
    pub closed_form: bool,
    /// Constants of the general α-Wiener boundedness argument.
    pub general_bound: Option<GeneralAlphaBound>,
}
