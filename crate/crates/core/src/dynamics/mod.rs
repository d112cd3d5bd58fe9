//! Time- and frequency-domain excitation signals over thermal
//! angular-momentum distributions.

mod rabi;
mod ramsey;
mod spectrum;

pub use rabi::{detuned_rabi_probability, first_peak, rabi_trace};
pub use ramsey::{
    contrast_envelope, ramsey_contrast, ramsey_manifold_probability, ramsey_trace, revival_time,
    RamseyConfig,
};
pub use spectrum::{spectrum_scan, SpectrumScan};
