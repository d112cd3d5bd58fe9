use std::path::Path;

use rotorsim_core::RotorError;
use thiserror::Error;

/// Everything a subcommand can fail with. Each variant maps to one stable
/// process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or configuration.
    #[error("{0}")]
    Usage(String),

    /// Unreadable input, unparsable data file or unwritable output.
    #[error("{0}")]
    Io(String),

    /// The computation itself failed.
    #[error("{0}")]
    Numerical(String),

    /// The fit ran to completion without converging. The report has been
    /// written.
    #[error("fit did not converge: {0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) | CliError::NotConverged(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<RotorError> for CliError {
    fn from(e: RotorError) -> Self {
        match e {
            // Inputs the model cannot accept are configuration problems.
            RotorError::Domain(_) | RotorError::EmptyData(_) | RotorError::FitSetup(_) => {
                CliError::Usage(e.to_string())
            }
            RotorError::Singularity { .. } | RotorError::Integrator { .. } | RotorError::Trajectory { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
