use thiserror::Error;

pub type Result<T, E = RotorError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RotorError {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty data: {0}")]
    EmptyData(String),

    /// The two ions coincide; the Coulomb force is singular.
    #[error("coincident ions at t = {time:e} s")]
    Singularity { time: f64 },

    #[error("integrator failure at t = {time:e} s: {reason}")]
    Integrator { time: f64, reason: String },

    /// A Monte-Carlo trajectory failed; carries the RNG seed that reproduces it.
    #[error("trajectory {index} (seed {seed}) failed: {source}")]
    Trajectory {
        index: usize,
        seed: u64,
        #[source]
        source: Box<RotorError>,
    },

    #[error("invalid fit problem: {0}")]
    FitSetup(String),
}

impl RotorError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        RotorError::Domain(msg.into())
    }
}
