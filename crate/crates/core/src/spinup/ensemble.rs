use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrator::{integrate_trajectory, IntegrationOptions};
use super::thermal::{sample_thermal_tilt, ThermalOccupation};
use super::SpinUpWaveform;
use crate::constants::HBAR;
use crate::error::{Result, RotorError};
use crate::RotorGeometry;

use std::f64::consts::PI;

/// Field-free time appended after the release to measure the final state, s.
pub const OBSERVATION_WINDOW: f64 = 100e-6;

/// Statistics of the released rotor over a thermally seeded ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseEnsembleResult {
    /// Hz
    pub final_f_rot_mean: f64,
    /// Hz
    pub final_f_rot_std: f64,
    /// Mean of L/ħ over the ensemble.
    pub l0_est: f64,
    /// Standard deviation of L/ħ.
    pub sigma_l_est: f64,
    pub trajectories_kept: usize,
    /// Sample skewness of L/ħ (0 for a Gaussian).
    pub skewness: f64,
    /// Sample excess kurtosis of L/ħ (0 for a Gaussian).
    pub excess_kurtosis: f64,
    /// Largest relative change of L over the field-free window, per ms.
    pub max_angular_momentum_drift_per_ms: f64,
    /// Per-trajectory seeds, in trajectory order.
    pub seeds: Vec<u64>,
}

/// Seed of trajectory `index` in an ensemble seeded with `seed` (SplitMix64
/// finalizer over the pair).
pub fn derive_trajectory_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `n_traj` thermally seeded trajectories through the full protocol
/// plus a field-free observation window and reports the final
/// angular-momentum distribution.
pub fn monte_carlo_release(
    n_traj: usize,
    occupation: ThermalOccupation,
    waveform: &SpinUpWaveform,
    geometry: &RotorGeometry,
    dt: f64,
    seed: u64,
) -> Result<ReleaseEnsembleResult> {
    if n_traj < 2 {
        return Err(RotorError::domain(format!("need at least 2 trajectories, got {n_traj}")));
    }
    let seeds: Vec<u64> = (0..n_traj).map(|i| derive_trajectory_seed(seed, i)).collect();
    release_ensemble(&seeds, occupation, waveform, geometry, dt)
}

/// As [`monte_carlo_release`] with explicit per-trajectory seeds.
pub fn release_ensemble(
    seeds: &[u64],
    occupation: ThermalOccupation,
    waveform: &SpinUpWaveform,
    geometry: &RotorGeometry,
    dt: f64,
) -> Result<ReleaseEnsembleResult> {
    if seeds.len() < 2 {
        return Err(RotorError::domain("need at least 2 trajectories"));
    }
    let t_end = waveform.total_duration() + OBSERVATION_WINDOW;
    let outcomes: Vec<Result<(f64, f64, f64)>> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, &s)| {
            run_one(occupation, waveform, geometry, dt, t_end, s).map_err(|e| RotorError::Trajectory {
                index,
                seed: s,
                source: Box::new(e),
            })
        })
        .collect();

    let mut ells = Vec::with_capacity(seeds.len());
    let mut freqs = Vec::with_capacity(seeds.len());
    let mut drift: f64 = 0.0;
    for outcome in outcomes {
        let (ell, f, d) = outcome?;
        ells.push(ell);
        freqs.push(f);
        drift = drift.max(d);
    }
    let (l_mean, l_std, skewness, excess_kurtosis) = moments(&ells);
    let (f_mean, f_std, _, _) = moments(&freqs);
    Ok(ReleaseEnsembleResult {
        final_f_rot_mean: f_mean,
        final_f_rot_std: f_std,
        l0_est: l_mean,
        sigma_l_est: l_std,
        trajectories_kept: ells.len(),
        skewness,
        excess_kurtosis,
        max_angular_momentum_drift_per_ms: drift,
        seeds: seeds.to_vec(),
    })
}

/// (ℓ = L/ħ, final rotation frequency in Hz, L drift per ms)
fn run_one(
    occupation: ThermalOccupation,
    waveform: &SpinUpWaveform,
    geometry: &RotorGeometry,
    dt: f64,
    t_end: f64,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    let start = sample_thermal_tilt(occupation, waveform, geometry, seed)?;
    let traj = integrate_trajectory(&start, waveform, geometry, dt, t_end, IntegrationOptions::default())?;
    let free = traj.free_segment.ok_or_else(|| RotorError::Integrator {
        time: traj.final_state.time,
        reason: "quadrupole never switched off".into(),
    })?;
    let ell = traj.final_state.rotor_angular_momentum(geometry.ion_mass) / HBAR;
    let per_ms = if free.duration > 0.0 {
        free.angular_momentum_drift / (free.duration / 1e-3)
    } else {
        0.0
    };
    Ok((ell, free.mean_rotation_rate / (2.0 * PI), per_ms))
}

/// (mean, sample std, skewness, excess kurtosis), reduced in input order.
fn moments(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let central = |k: i32| values.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let m2 = central(2);
    let std = (m2 * n / (n - 1.0)).sqrt();
    if m2 == 0.0 {
        return (mean, 0.0, 0.0, 0.0);
    }
    (mean, std, central(3) / m2.powf(1.5), central(4) / (m2 * m2) - 3.0)
}
