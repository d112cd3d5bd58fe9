//! Weighted nonlinear least-squares fitting of spectrum, Rabi and Ramsey
//! data, with parameters optionally shared across datasets.

mod dataset;
pub mod guess;
mod lm;
mod model;
mod problem;

pub use dataset::{Dataset, DatasetKind};
pub use lm::{
    central_jacobian, forward_jacobian, invert_normal_matrix, jacobian_steps, minimize, BoundEvent, LmOptions,
    LmOutcome, StepRecord,
};
pub use model::{
    rabi_model, ramsey_model, spectrum_model, ModelKind, RabiArgs, RamseyArgs, SpectrumArgs, FIT_N_CUT,
};
pub use problem::{
    default_bounds, fit, ArgBinding, FitOptions, FitProblem, FitResult, ModelBinding, ParameterSpec,
};

use crate::RotorGeometry;

/// γ_ℓ/Δℓ = 4 ω_r σ_ℓ in rad/s: the per-order linewidth corresponding to
/// a distribution width σ_ℓ.
pub fn linewidth_per_order(geometry: &RotorGeometry, sigma_l: f64) -> f64 {
    4.0 * geometry.omega_r * sigma_l
}

/// Inverse of [`linewidth_per_order`].
pub fn sigma_from_linewidth(geometry: &RotorGeometry, gamma_per_order: f64) -> f64 {
    gamma_per_order / (4.0 * geometry.omega_r)
}
