mod fit;
mod simulate;
mod spinup;

use std::path::{Path, PathBuf};

use rotorsim_core::fitting::{Dataset, DatasetKind};
use rotorsim_core::spinup::derive_trajectory_seed;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub use fit::cmd_fit;
pub use simulate::{cmd_rabi, cmd_ramsey, cmd_spectrum};
pub use spinup::cmd_spinup;

/// Independent random streams derived from the single `--seed`.
#[derive(Debug, Clone, Copy)]
enum Stream {
    ShotNoise = 1,
    Ensemble = 2,
    MultiStart = 3,
}

/// Everything a subcommand needs: the parsed config plus command-line
/// overrides.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub svg: bool,
}

impl Context {
    /// `--out` wins over `output.dir`, which wins over the working directory.
    pub fn new(config: RunConfig, seed: u64, out: Option<PathBuf>, svg: bool) -> Self {
        let out_dir = out.or_else(|| config.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
        let svg = svg || config.output.svg;
        Self { config, seed, out_dir, svg }
    }

    fn stream_seed(&self, stream: Stream) -> u64 {
        derive_trajectory_seed(self.seed, stream as usize)
    }

    /// Path of output `name`, creating the output directory on first use.
    fn output(&self, name: &str) -> CliResult<PathBuf> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| CliError::io(&self.out_dir, e))?;
        Ok(self.out_dir.join(name))
    }

    fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.output(name)?;
        write_file(&path, contents)?;
        Ok(path)
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Probabilities as measured: binomial samples with their standard errors
/// when `shots` is set, the exact values otherwise.
fn measure(
    kind: DatasetKind,
    x: &[f64],
    p: &[f64],
    shots: Option<u32>,
    seed: u64,
) -> CliResult<(Vec<f64>, Option<Vec<f64>>)> {
    match shots {
        None => Ok((p.to_vec(), None)),
        Some(n) => {
            let ds = Dataset::simulate(kind, x.to_vec(), p, n, seed)?;
            let err = ds.effective_errors();
            Ok((ds.y, err))
        }
    }
}
