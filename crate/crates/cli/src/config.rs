//! Run configuration. Every dimensional key carries its unit as a suffix
//! (`_hz`, `_us`, `_nm`, `_deg`, `_mk`, `_s`, `_u`); values are converted to
//! SI exactly once, here or in the command that consumes them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rotorsim_core::constants::{self, ion_mass_from_u};
use rotorsim_core::RotorGeometry;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const TWO_PI: f64 = 2.0 * PI;
pub const US: f64 = 1e-6;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub geometry: GeometryConfig,
    pub state: Option<StateConfig>,
    pub spectrum: Option<SpectrumConfig>,
    pub rabi: Option<RabiConfig>,
    pub ramsey: Option<RamseyConfig>,
    pub spinup: Option<SpinupConfig>,
    pub fit: Option<FitConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory of the config file; relative data paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Trap and laser geometry. Omitted keys fall back to the ⁴⁰Ca⁺ reference
/// trap probed at 729 nm and 82.4° from the trap axis.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub mass_u: f64,
    pub omega_x_hz: f64,
    /// Defaults to twice `omega_x_hz`.
    pub omega_z_hz: Option<f64>,
    pub wavelength_nm: f64,
    pub theta_deg: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            mass_u: constants::CA40_ATOMIC_MASS_U,
            omega_x_hz: constants::REFERENCE_OMEGA_X_HZ,
            omega_z_hz: None,
            wavelength_nm: constants::QUBIT_WAVELENGTH * 1e9,
            theta_deg: 82.4,
        }
    }
}

impl GeometryConfig {
    pub fn rotor(&self) -> CliResult<RotorGeometry> {
        let wx = positive("geometry.omega_x_hz", self.omega_x_hz)?;
        let wz = positive("geometry.omega_z_hz", self.omega_z_hz.unwrap_or(2.0 * wx))?;
        let mass = positive("geometry.mass_u", self.mass_u)?;
        Ok(RotorGeometry::new(ion_mass_from_u(mass), TWO_PI * wx, TWO_PI * wz)?)
    }

    /// m
    pub fn wavelength(&self) -> CliResult<f64> {
        Ok(positive("geometry.wavelength_nm", self.wavelength_nm)? * 1e-9)
    }

    /// rad
    pub fn theta(&self) -> CliResult<f64> {
        if !(0.0..=90.0).contains(&self.theta_deg) {
            return Err(CliError::usage(format!(
                "geometry.theta_deg: must lie in [0, 90], got {}",
                self.theta_deg
            )));
        }
        Ok(self.theta_deg.to_radians())
    }
}

/// Angular-momentum distribution. Exactly one of `sigma_l` and
/// `temperature_mk` must be given.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub f_rot_hz: f64,
    pub sigma_l: Option<f64>,
    pub temperature_mk: Option<f64>,
}

impl StateConfig {
    pub fn validate(&self) -> CliResult<()> {
        positive("state.f_rot_hz", self.f_rot_hz)?;
        match (self.sigma_l, self.temperature_mk) {
            (Some(s), None) => positive("state.sigma_l", s).map(drop),
            (None, Some(t)) => positive("state.temperature_mk", t).map(drop),
            _ => Err(CliError::usage("state: give exactly one of sigma_l and temperature_mk")),
        }
    }

    /// Mean angular momentum ℓ0 for the configured rotation frequency.
    pub fn l0(&self, geometry: &RotorGeometry) -> CliResult<f64> {
        Ok(geometry.mean_quantum_number(self.f_rot_hz)?)
    }

    pub fn sigma_l(&self, geometry: &RotorGeometry) -> CliResult<f64> {
        self.validate()?;
        match (self.sigma_l, self.temperature_mk) {
            (Some(s), _) => Ok(s),
            (_, Some(t)) => Ok(geometry.thermal_sigma(t * 1e-3)?),
            _ => unreachable!("validated above"),
        }
    }
}

/// A sampling grid: either `start`/`stop`/`step` (stop included when it
/// lands on the grid) or an explicit `values` list.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
    pub values: Option<Vec<f64>>,
}

impl Grid {
    pub fn points(&self, path: &str) -> CliResult<Vec<f64>> {
        let points = match (self.start, self.stop, self.step, &self.values) {
            (None, None, None, Some(v)) => v.clone(),
            (Some(start), Some(stop), Some(step), None) => {
                if !(step > 0.0) || !step.is_finite() {
                    return Err(CliError::usage(format!("{path}.step: must be > 0, got {step}")));
                }
                if stop < start {
                    Vec::new()
                } else {
                    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                    (0..n).map(|i| start + i as f64 * step).collect()
                }
            }
            _ => {
                return Err(CliError::usage(format!(
                    "{path}: give either start, stop and step, or values"
                )))
            }
        };
        if points.is_empty() {
            return Err(CliError::usage(format!("{path}: empty data: the grid has no points")));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(CliError::usage(format!("{path}: grid values must be finite")));
        }
        Ok(points)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub detuning_grid_hz: Grid,
    pub probe_time_us: f64,
    /// Carrier Rabi frequency.
    pub omega_hz: f64,
    /// Highest sideband order simulated; defaults to one past the highest
    /// appreciably coupled order.
    pub max_order: Option<i64>,
    pub shots: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiConfig {
    pub delta_l: i64,
    pub omega_hz: f64,
    #[serde(default)]
    pub detuning_hz: f64,
    pub time_grid_us: Grid,
    pub shots: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseyConfig {
    pub delta_l: i64,
    #[serde(default)]
    pub detuning_hz: f64,
    pub wait_grid_us: Grid,
    /// Finite π/2 pulses; omitted means ideal instantaneous pulses.
    pub pulse: Option<PulseConfig>,
    pub shots: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub duration_us: f64,
    pub omega_hz: f64,
}

fn default_points() -> usize {
    2001
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinupConfig {
    pub f_target_hz: f64,
    pub t_spin_us: f64,
    pub t_release_us: f64,
    pub omega_tilt_hz: f64,
    /// Thermal state of the pinned tilt mode: exactly one of these.
    pub mean_occupation: Option<f64>,
    pub temperature_mk: Option<f64>,
    pub n_traj: usize,
    /// Integration step; defaults to the stable step with a safety margin.
    pub dt_s: Option<f64>,
    #[serde(default = "default_points")]
    pub waveform_points: usize,
    /// Rows of the exported single-trajectory CSV.
    #[serde(default = "default_points")]
    pub trajectory_points: usize,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub datasets: Vec<FitDatasetConfig>,
    pub parameters: Vec<FitParameterConfig>,
    #[serde(default)]
    pub multi_start: bool,
    pub reweight_passes: Option<usize>,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModelName {
    Spectrum,
    Rabi,
    Ramsey,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitDatasetConfig {
    /// Trace CSV; relative paths resolve against the config file.
    pub path: PathBuf,
    pub model: FitModelName,
    /// Sideband order (rabi, ramsey).
    pub delta_l: Option<i64>,
    /// Highest order in the spectrum model.
    pub max_order: Option<i64>,
    #[serde(default = "default_true")]
    pub ideal_pulses: bool,
    /// Shots per point. When given, weights follow binomial statistics and
    /// any `excitation_err` column is ignored.
    pub shots: Option<u32>,
    /// Model arguments by unit-suffixed name.
    pub args: BTreeMap<String, ArgSource>,
}

/// A model argument: a fixed value, a parameter name, or a scaled
/// parameter (argument = scale · parameter).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ArgSource {
    Fixed(f64),
    Param(String),
    Scaled {
        param: String,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// A fit parameter in the units of the argument key it is bound to.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitParameterConfig {
    pub name: String,
    pub initial: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    #[serde(default = "default_true")]
    pub shared: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative to the working directory. `--out` overrides.
    pub dir: Option<PathBuf>,
    /// Also write SVG plots. `--svg` forces this on.
    #[serde(default)]
    pub svg: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    /// Parses a config; errors name the offending field path.
    pub fn parse(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                CliError::usage(e.into_inner().to_string())
            } else {
                CliError::usage(format!("{path}: {}", e.into_inner()))
            }
        })?;
        if let Some(state) = &config.state {
            state.validate()?;
        }
        Ok(config)
    }

    pub fn state(&self) -> CliResult<&StateConfig> {
        self.state.as_ref().ok_or_else(|| CliError::usage("state: block missing"))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

/// Section `name` of the config, or a usage error naming it.
pub fn section<'a, T>(block: &'a Option<T>, name: &str) -> CliResult<&'a T> {
    block.as_ref().ok_or_else(|| CliError::usage(format!("{name}: block missing")))
}

pub fn positive(path: &str, value: f64) -> CliResult<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::usage(format!("{path}: must be > 0, got {value}")))
    }
}

pub fn non_negative(path: &str, value: f64) -> CliResult<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::usage(format!("{path}: must be >= 0, got {value}")))
    }
}

pub fn finite(path: &str, value: f64) -> CliResult<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::usage(format!("{path}: must be finite, got {value}")))
    }
}

pub fn shots(path: &str, shots: Option<u32>) -> CliResult<Option<u32>> {
    match shots {
        Some(0) => Err(CliError::usage(format!("{path}: must be > 0"))),
        other => Ok(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_reported_with_its_path() {
        let err = RunConfig::parse(r#"{"geometry": {"theta": 82.4}}"#).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().starts_with("geometry"), "{err}");
        assert!(err.to_string().contains("theta"), "{err}");
    }

    #[test]
    fn wrong_type_names_the_nested_field() {
        let err = RunConfig::parse(r#"{"rabi": {"delta_l": "four", "omega_hz": 1, "time_grid_us": {"values": [0]}}}"#)
            .unwrap_err();
        assert!(err.to_string().starts_with("rabi.delta_l"), "{err}");
    }

    #[test]
    fn state_needs_exactly_one_width() {
        let both = r#"{"state": {"f_rot_hz": 1e5, "sigma_l": 46, "temperature_mk": 0.5}}"#;
        let none = r#"{"state": {"f_rot_hz": 1e5}}"#;
        assert!(RunConfig::parse(both).is_err());
        assert!(RunConfig::parse(none).is_err());
        assert!(RunConfig::parse(r#"{"state": {"f_rot_hz": 1e5, "temperature_mk": 0.5}}"#).is_ok());
    }

    #[test]
    fn temperature_maps_to_thermal_width() {
        let c = RunConfig::parse(r#"{"state": {"f_rot_hz": 1e5, "temperature_mk": 0.52}}"#).unwrap();
        let g = c.geometry.rotor().unwrap();
        let s = c.state().unwrap().sigma_l(&g).unwrap();
        assert!((s - 917.9).abs() < 0.5, "{s}");
    }

    #[test]
    fn grid_forms() {
        let g = Grid { start: Some(0.0), stop: Some(10.0), step: Some(2.5), values: None };
        assert_eq!(g.points("g").unwrap(), vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        let g = Grid { start: None, stop: None, step: None, values: Some(vec![0.0]) };
        assert_eq!(g.points("g").unwrap(), vec![0.0]);
        let empty = Grid { start: Some(1.0), stop: Some(0.0), step: Some(1.0), values: None };
        assert!(empty.points("g").unwrap_err().to_string().contains("empty data"));
        let mixed = Grid { start: Some(0.0), stop: None, step: None, values: Some(vec![1.0]) };
        assert!(mixed.points("g").is_err());
    }

    #[test]
    fn arg_sources() {
        let m: BTreeMap<String, ArgSource> =
            serde_json::from_str(r#"{"a": 1.5, "b": "sigma", "c": {"param": "sigma", "scale": 4}}"#).unwrap();
        assert_eq!(m["a"], ArgSource::Fixed(1.5));
        assert_eq!(m["b"], ArgSource::Param("sigma".into()));
        assert_eq!(m["c"], ArgSource::Scaled { param: "sigma".into(), scale: 4.0 });
    }
}
