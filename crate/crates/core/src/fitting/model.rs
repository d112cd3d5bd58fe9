use serde::{Deserialize, Serialize};

use crate::dynamics::{rabi_trace, ramsey_trace, spectrum_scan, RamseyConfig, SpectrumScan};
use crate::error::{Result, RotorError};
use crate::{AngularDistribution, LaserDrive, RotorGeometry};

use super::DatasetKind;

/// Truncation of the Gaussian ℓ grid used by the fit models. Wider than the
/// default so that grid-edge jumps as σ_ℓ varies sit far below the
/// finite-difference step.
pub const FIT_N_CUT: f64 = 8.0;

/// Which dynamics operation a dataset is compared against, plus the
/// settings that are never fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelKind {
    /// Sideband spectrum over carrier detuning (rad/s). ℓ0 follows f_rot.
    Spectrum { wavelength: f64, max_order: i64 },
    /// Sideband Rabi flopping over drive time (s).
    Rabi { delta_l: i64, l0: f64 },
    /// Ramsey fringe over wait time (s).
    Ramsey { delta_l: i64, l0: f64, ideal_pulses: bool },
}

impl ModelKind {
    /// Argument names, in the order [`ModelKind::evaluate`] expects them.
    pub fn arguments(&self) -> &'static [&'static str] {
        match self {
            ModelKind::Spectrum { .. } => &["theta", "f_rot", "omega", "probe_time", "sigma_l"],
            ModelKind::Rabi { .. } => &["omega", "sigma_l", "detuning"],
            ModelKind::Ramsey { ideal_pulses: true, .. } => &["sigma_l", "detuning"],
            ModelKind::Ramsey { ideal_pulses: false, .. } => {
                &["sigma_l", "detuning", "omega", "pulse_duration"]
            }
        }
    }

    pub fn dataset_kind(&self) -> DatasetKind {
        match self {
            ModelKind::Spectrum { .. } => DatasetKind::Spectrum,
            ModelKind::Rabi { .. } => DatasetKind::Rabi,
            ModelKind::Ramsey { .. } => DatasetKind::Ramsey,
        }
    }

    /// Evaluate at arbitrary `x` (any order, duplicates allowed).
    pub fn evaluate(&self, geometry: &RotorGeometry, args: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let names = self.arguments();
        if args.len() != names.len() {
            return Err(RotorError::FitSetup(format!(
                "model expects {} arguments ({}), got {}",
                names.len(),
                names.join(", "),
                args.len()
            )));
        }
        match *self {
            ModelKind::Spectrum { wavelength, max_order } => spectrum_model(
                geometry,
                wavelength,
                max_order,
                &SpectrumArgs {
                    theta: args[0],
                    f_rot: args[1],
                    omega: args[2],
                    probe_time: args[3],
                    sigma_l: args[4],
                },
                x,
            ),
            ModelKind::Rabi { delta_l, l0 } => rabi_model(
                geometry,
                delta_l,
                l0,
                &RabiArgs { omega: args[0], sigma_l: args[1], detuning: args[2] },
                x,
            ),
            ModelKind::Ramsey { delta_l, l0, ideal_pulses } => {
                let (omega, pulse_duration) = if ideal_pulses { (0.0, 0.0) } else { (args[2], args[3]) };
                ramsey_model(
                    geometry,
                    delta_l,
                    l0,
                    ideal_pulses,
                    &RamseyArgs { sigma_l: args[0], detuning: args[1], omega, pulse_duration },
                    x,
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumArgs {
    /// Laser angle to the rotation axis, rad.
    pub theta: f64,
    /// Hz.
    pub f_rot: f64,
    /// Carrier Rabi frequency, rad/s.
    pub omega: f64,
    /// s.
    pub probe_time: f64,
    pub sigma_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiArgs {
    pub omega: f64,
    pub sigma_l: f64,
    /// Laser detuning from the sideband, rad/s.
    pub detuning: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseyArgs {
    pub sigma_l: f64,
    pub detuning: f64,
    /// Ignored with ideal pulses.
    pub omega: f64,
    /// Ignored with ideal pulses.
    pub pulse_duration: f64,
}

/// Spectrum over detunings `x` (rad/s) for orders −max_order..=max_order.
pub fn spectrum_model(
    geometry: &RotorGeometry,
    wavelength: f64,
    max_order: i64,
    args: &SpectrumArgs,
    x: &[f64],
) -> Result<Vec<f64>> {
    if max_order < 0 {
        return Err(RotorError::domain(format!("max_order must be >= 0, got {max_order}")));
    }
    let l0 = geometry.mean_quantum_number(args.f_rot)?;
    let dist = AngularDistribution::gaussian_truncated(l0, args.sigma_l, FIT_N_CUT)?;
    let laser = LaserDrive::new(wavelength, args.theta, args.omega, 0)?;
    on_sorted_grid(x, |grid| {
        let request = SpectrumScan::request(grid, args.probe_time, SpectrumScan::orders_up_to(max_order));
        Ok(spectrum_scan(geometry, &dist, &laser, args.f_rot, &request)?.excitation)
    })
}

/// Rabi flopping on sideband `delta_l` over drive times `x` (s).
pub fn rabi_model(geometry: &RotorGeometry, delta_l: i64, l0: f64, args: &RabiArgs, x: &[f64]) -> Result<Vec<f64>> {
    let dist = AngularDistribution::gaussian_truncated(l0, args.sigma_l, FIT_N_CUT)?;
    let drive = LaserDrive::new(crate::constants::QUBIT_WAVELENGTH, 0.0, args.omega, delta_l)?
        .with_detuning(args.detuning);
    rabi_trace(geometry, &dist, &drive, x)
}

/// Ramsey fringe on sideband `delta_l` over wait times `x` (s).
pub fn ramsey_model(
    geometry: &RotorGeometry,
    delta_l: i64,
    l0: f64,
    ideal_pulses: bool,
    args: &RamseyArgs,
    x: &[f64],
) -> Result<Vec<f64>> {
    let dist = AngularDistribution::gaussian_truncated(l0, args.sigma_l, FIT_N_CUT)?;
    let config = RamseyConfig {
        delta_l,
        pulse_duration: args.pulse_duration,
        omega_rabi: args.omega,
        overall_detuning: args.detuning,
        wait_grid: x.to_vec(),
        ideal_pulses,
    };
    ramsey_trace(geometry, &dist, &config)
}

/// Runs `eval` on the sorted, de-duplicated points of `x` and maps the
/// results back to the original order.
fn on_sorted_grid(x: &[f64], eval: impl FnOnce(Vec<f64>) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    if x.windows(2).all(|w| w[1] > w[0]) {
        return eval(x.to_vec());
    }
    let mut grid = x.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let values = eval(grid.clone())?;
    Ok(x.iter()
        .map(|v| values[grid.partition_point(|g| g < v)])
        .collect())
}
