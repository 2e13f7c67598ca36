//! Supremum location of the stationary OU process `R` (covariance
//! `e^{−|a−b|/2}`, generator `½∂² − (x/2)∂`) and of standardized
//! Gauss–Markov processes `Z* = R ∘ β`.
//!
//! - [`hermite`]: `Hr_α`, `Hi_α` and the normalized Hermite functions `Ĥ_ν`.
//! - [`first_passage`]: the passage-time density `n_x(u, y)` and its CDF.
//! - [`density`]: the trivariate density, the scale/speed pair and the
//!   density `f_τ` of the supremum location on `[0, T]`.
//! - [`reduction`]: `τ_{Z*,[t₁,t₂]} = β⁻¹(τ_{R,[β(t₁),β(t₂)]})` and the
//!   pulled-back density.

pub mod density;
pub mod first_passage;
pub mod hermite;
mod ode;
pub mod reduction;

pub use density::{
    density_on_grid, sup_location_density, trivariate_density, ScaleSpeed, SupLocationConfig, SupLocationDensity,
    SupLocationDiagnostics, SupLocationSolver,
};
pub use first_passage::{first_passage_density, passage_laplace, FirstPassageConfig, FirstPassageDensity};
pub use hermite::{hermite_hat, hermite_imag, hermite_real, ln_hermite_hat, HermiteEval};
pub use reduction::{
    argmax_density_of_standardized, reduce_argmax, ArgmaxReduction, StandardizedArgmaxDensity,
    StandardizedArgmaxSolver, StandardizedProcessMap,
};
