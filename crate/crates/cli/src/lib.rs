//! Command-line front end for `rotorsim-core`: reads a JSON run
//! configuration, runs one simulation or fit, and writes CSV tables, JSON
//! reports and optional SVG plots.
//!
//! Exit codes are a stable contract: 0 success, 1 usage or configuration
//! error, 2 I/O or data-file error, 3 numerical failure (including a fit
//! that did not converge).

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;
pub mod trace;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Context;
use crate::config::RunConfig;
pub use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "rotorsim", version, about = "Two-ion rotor spectroscopy, spin-up and fitting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulated sideband spectrum (spectrum.csv).
    Spectrum(RunArgs),
    /// Thermal Rabi flopping on one sideband order (rabi.csv).
    Rabi(RunArgs),
    /// Ramsey fringe on one sideband order (ramsey.csv).
    Ramsey(RunArgs),
    /// Monte-Carlo spin-up ensemble (spinup_report.json, waveform.csv, trajectory.csv).
    Spinup(RunArgs),
    /// Fit trace files against the models (fit_report.json).
    Fit(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed; every random stream is derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (default: output.dir from the config, else ".").
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
}

/// Caps the global rayon pool at `ROTORSIM_THREADS` when set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("ROTORSIM_THREADS") else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::usage(format!("ROTORSIM_THREADS: expected a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("ROTORSIM_THREADS: {e}")))
}

pub fn run(command: Command) -> CliResult<()> {
    let (args, f): (RunArgs, fn(&Context) -> CliResult<()>) = match command {
        Command::Spectrum(a) => (a, commands::cmd_spectrum),
        Command::Rabi(a) => (a, commands::cmd_rabi),
        Command::Ramsey(a) => (a, commands::cmd_ramsey),
        Command::Spinup(a) => (a, commands::cmd_spinup),
        Command::Fit(a) => (a, commands::cmd_fit),
    };
    let config = RunConfig::load(&args.config)?;
    f(&Context::new(config, args.seed, args.out, args.svg))
}
