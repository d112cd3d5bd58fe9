use rayon::prelude::*;

use crate::error::{Result, RotorError};
use crate::{AngularDistribution, LaserDrive, RotorGeometry};

/// Two-level excitation probability after driving for `t` at Rabi
/// frequency `omega` and detuning `delta`:
/// Ω²/(Ω²+δ²)·sin²(½√(Ω²+δ²)·t).
#[inline]
pub fn detuned_rabi_probability(omega: f64, delta: f64, t: f64) -> f64 {
    let generalized_sq = omega * omega + delta * delta;
    if generalized_sq == 0.0 {
        return 0.0;
    }
    let s = (0.5 * generalized_sq.sqrt() * t).sin();
    omega * omega / generalized_sq * s * s
}

/// Excitation probability P(D)(t) of a single ion driven on sideband
/// `drive.delta_l`, summed over every manifold |ℓ⟩ → |ℓ+Δℓ⟩ of `dist`.
///
/// Each manifold sees detuning δ_ℓ + Δ with δ_ℓ = 2ω_r(ℓ0 − ℓ)Δℓ and the
/// same Rabi frequency, since the sideband coupling does not depend on ℓ.
pub fn rabi_trace(
    geometry: &RotorGeometry,
    dist: &AngularDistribution,
    drive: &LaserDrive,
    times: &[f64],
) -> Result<Vec<f64>> {
    if dist.is_empty() {
        return Err(RotorError::EmptyData("angular distribution is empty".into()));
    }
    if !(drive.omega_rabi > 0.0) {
        return Err(RotorError::domain(format!(
            "Rabi frequency must be > 0, got {}",
            drive.omega_rabi
        )));
    }
    let manifolds: Vec<(f64, f64)> = dist
        .iter()
        .map(|(l, p)| {
            let delta = geometry.transition_detuning(l, dist.l0(), drive.delta_l) + drive.detuning;
            (p, delta)
        })
        .collect();
    let omega = drive.omega_rabi;
    Ok(times
        .par_iter()
        .map(|&t| {
            let total: f64 = manifolds
                .iter()
                .map(|&(p, delta)| p * detuned_rabi_probability(omega, delta, t))
                .sum();
            total.clamp(0.0, 1.0)
        })
        .collect())
}

/// First local maximum `(t, P)` of a sampled trace.
pub fn first_peak(times: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len().min(times.len());
    (1..n.saturating_sub(1))
        .find(|&i| values[i] >= values[i - 1] && values[i] > values[i + 1])
        .map(|i| (times[i], values[i]))
}
