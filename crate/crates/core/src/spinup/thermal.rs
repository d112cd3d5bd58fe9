use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::force::pinned_equilibrium;
use super::{ClassicalState, SpinUpWaveform};
use crate::constants::{BOLTZMANN, HBAR};
use crate::error::{Result, RotorError};
use crate::RotorGeometry;

/// Thermal state of the pinned tilt mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalOccupation {
    /// Mean phonon number n̄.
    MeanOccupation(f64),
    /// Temperature, K.
    Temperature(f64),
}

impl ThermalOccupation {
    /// n̄ for a mode of angular frequency `omega`.
    pub fn mean_occupation(&self, omega: f64) -> Result<f64> {
        match *self {
            ThermalOccupation::MeanOccupation(n) if n >= 0.0 && n.is_finite() => Ok(n),
            ThermalOccupation::Temperature(0.0) => Ok(0.0),
            ThermalOccupation::Temperature(t) if t > 0.0 && t.is_finite() => {
                Ok(1.0 / ((HBAR * omega / (BOLTZMANN * t)).exp_m1()))
            }
            other => Err(RotorError::domain(format!("invalid thermal occupation {other:?}"))),
        }
    }
}

/// Variances (position, momentum) of the tilt-mode quadratures in the
/// arc-length coordinate of the relative motion, effective mass µ = m/2:
/// ((n̄+½)ħ/(µω), (n̄+½)ħµω).
pub fn tilt_quadrature_variances(
    occupation: ThermalOccupation,
    omega_tilt: f64,
    geometry: &RotorGeometry,
) -> Result<(f64, f64)> {
    if !(omega_tilt > 0.0) {
        return Err(RotorError::domain("tilt frequency must be > 0"));
    }
    let n = occupation.mean_occupation(omega_tilt)?;
    let mu = 0.5 * geometry.ion_mass;
    let action = (n + 0.5) * HBAR;
    Ok((action / (mu * omega_tilt), action * mu * omega_tilt))
}

/// Pinned crystal with its tilt mode drawn from a classical thermal
/// Gaussian of mean energy (n̄+½)ħω_tilt. Deterministic for a fixed seed.
pub fn sample_thermal_tilt(
    occupation: ThermalOccupation,
    waveform: &SpinUpWaveform,
    geometry: &RotorGeometry,
    seed: u64,
) -> Result<ClassicalState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (var_q, var_p) = tilt_quadrature_variances(occupation, waveform.omega_tilt, geometry)?;
    let q = Normal::new(0.0, var_q.sqrt()).expect("finite variance").sample(&mut rng);
    let p = Normal::new(0.0, var_p.sqrt()).expect("finite variance").sample(&mut rng);

    let eq = pinned_equilibrium(geometry, waveform)?;
    let rel = eq.relative();
    let separation = rel[0].hypot(rel[1]);
    let angle = rel[1].atan2(rel[0]) + q / separation;
    let omega = p / (0.5 * geometry.ion_mass) / separation;
    let mut state = ClassicalState::rigid(0.5 * separation, angle, omega);
    state.time = eq.time;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinup::build_waveform;
    use std::f64::consts::PI;

    fn setup() -> (RotorGeometry, SpinUpWaveform) {
        (
            RotorGeometry::calcium_reference(),
            build_waveform(1e5, 5e-5, 1e-3, 2.0 * PI * 280e3).unwrap(),
        )
    }

    #[test]
    fn ground_state_width() {
        let (g, w) = setup();
        let (vq, vp) = tilt_quadrature_variances(ThermalOccupation::MeanOccupation(0.0), w.omega_tilt, &g).unwrap();
        let mu = g.ion_mass / 2.0;
        assert!((vq / (HBAR / (2.0 * mu * w.omega_tilt)) - 1.0).abs() < 1e-12);
        assert!((vq * vp / (HBAR * HBAR / 4.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn variance_linear_in_occupation() {
        let (g, w) = setup();
        let v = |n| tilt_quadrature_variances(ThermalOccupation::MeanOccupation(n), w.omega_tilt, &g).unwrap().0;
        assert!((v(3.5) / v(0.0) - 8.0).abs() < 1e-12);
        assert!((v(9.5) / v(4.5) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn temperature_conversion() {
        let w = 2.0 * PI * 280e3;
        assert_eq!(ThermalOccupation::Temperature(0.0).mean_occupation(w).unwrap(), 0.0);
        let n = ThermalOccupation::Temperature(0.5e-3).mean_occupation(w).unwrap();
        let classical = BOLTZMANN * 0.5e-3 / (HBAR * w);
        assert!((n - (classical - 0.5)).abs() < 0.01 * classical);
        assert!(ThermalOccupation::MeanOccupation(-1.0).mean_occupation(w).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let (g, w) = setup();
        let occ = ThermalOccupation::MeanOccupation(2.0);
        let a = sample_thermal_tilt(occ, &w, &g, 42).unwrap();
        let b = sample_thermal_tilt(occ, &w, &g, 42).unwrap();
        let c = sample_thermal_tilt(occ, &w, &g, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sampled_spread_matches_variance() {
        let (g, w) = setup();
        let occ = ThermalOccupation::MeanOccupation(10.0);
        let (vq, _) = tilt_quadrature_variances(occ, w.omega_tilt, &g).unwrap();
        let n = 4000;
        let angles: Vec<f64> = (0..n)
            .map(|s| {
                let st = sample_thermal_tilt(occ, &w, &g, s).unwrap();
                st.orientation() * st.separation()
            })
            .collect();
        let var = angles.iter().map(|a| a * a).sum::<f64>() / n as f64;
        assert!((var / vq - 1.0).abs() < 0.1, "{}", var / vq);
    }
}
