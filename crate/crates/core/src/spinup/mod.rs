//! Classical simulation of the spin-up protocol: a static in-plane
//! quadrupole pins the crystal, its orientation is accelerated to the
//! target rotation rate, and its amplitude is ramped to zero, releasing a
//! freely rotating crystal.

mod ensemble;
mod force;
mod integrator;
mod thermal;
mod waveform;

pub use ensemble::{
    derive_trajectory_seed, monte_carlo_release, release_ensemble, ReleaseEnsembleResult, OBSERVATION_WINDOW,
};
pub use force::{
    force_field, pinned_equilibrium, pinned_radius, potential_energy, rotating_radius, ClassicalState,
};
pub use integrator::{default_dt, integrate_trajectory, max_stable_dt, IntegrationOptions, Trajectory};
pub use thermal::{sample_thermal_tilt, tilt_quadrature_variances, ThermalOccupation};
pub use waveform::{build_waveform, Stage, SpinUpWaveform, WaveformSample, DEFAULT_PIN_HOLD};
