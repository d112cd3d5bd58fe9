use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rabi::detuned_rabi_probability;
use crate::bessel::bessel_j_table;
use crate::error::{Result, RotorError};
use crate::{AngularDistribution, LaserDrive, RotorGeometry};

/// A sideband spectrum: excitation after a fixed-length probe pulse as a
/// function of laser detuning from the carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumScan {
    /// Laser detuning from the carrier, rad/s, strictly increasing.
    pub detuning_grid: Vec<f64>,
    /// s
    pub probe_time: f64,
    pub included_orders: Vec<i64>,
    /// Filled by [`spectrum_scan`]; empty on a request.
    pub excitation: Vec<f64>,
    /// Set when neighbouring sideband groups are not resolved, so the
    /// independent-group model is unreliable.
    pub groups_overlap: bool,
}

impl SpectrumScan {
    pub fn request(detuning_grid: Vec<f64>, probe_time: f64, included_orders: Vec<i64>) -> Self {
        Self {
            detuning_grid,
            probe_time,
            included_orders,
            excitation: Vec::new(),
            groups_overlap: false,
        }
    }

    /// Symmetric order list `-n..=n`.
    pub fn orders_up_to(n: i64) -> Vec<i64> {
        (-n..=n).collect()
    }
}

/// Rabi frequency of order `n` when `carrier_omega` drives the carrier:
/// Ω·|J_n(x)/J_0(x)|.
pub(crate) fn order_rabi_frequencies(carrier_omega: f64, argument: f64, orders: &[i64]) -> Result<Vec<f64>> {
    let max = orders.iter().map(|o| o.unsigned_abs()).max().unwrap_or(0) as usize;
    let table = bessel_j_table(max, argument);
    if table[0].abs() < 1e-12 {
        return Err(RotorError::domain(format!(
            "carrier coupling vanishes at k_x r_e = {argument}; carrier-referenced Rabi frequencies undefined"
        )));
    }
    Ok(orders
        .iter()
        .map(|o| carrier_omega * (table[o.unsigned_abs() as usize] / table[0]).abs())
        .collect())
}

/// Simulated sideband spectrum.
///
/// `laser.omega_rabi` is the carrier Rabi frequency; order Δℓ is driven at
/// Ω·|J_Δℓ/J_0|. `laser.delta_l` and `laser.detuning` are ignored. Each line
/// |ℓ⟩ → |ℓ+Δℓ⟩ sits at 2π f_rot Δℓ − δ_ℓ from the carrier and contributes a
/// two-level Rabi response weighted by p_ℓ. Groups are summed independently
/// and the total is capped at 1.
pub fn spectrum_scan(
    geometry: &RotorGeometry,
    dist: &AngularDistribution,
    laser: &LaserDrive,
    f_rot: f64,
    request: &SpectrumScan,
) -> Result<SpectrumScan> {
    if !(request.probe_time > 0.0) {
        return Err(RotorError::domain(format!(
            "probe time must be > 0, got {}",
            request.probe_time
        )));
    }
    if request.detuning_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(RotorError::domain("detuning grid must be strictly increasing"));
    }
    if dist.is_empty() {
        return Err(RotorError::EmptyData("angular distribution is empty".into()));
    }
    if !(f_rot >= 0.0) {
        return Err(RotorError::domain(format!("f_rot must be >= 0, got {f_rot}")));
    }

    let orders = &request.included_orders;
    let rabi = order_rabi_frequencies(laser.omega_rabi, laser.coupling_argument(geometry.r_e), orders)?;
    // (Rabi frequency, group center, per-manifold line offsets)
    let groups: Vec<(f64, f64, Vec<(f64, f64)>)> = orders
        .iter()
        .zip(&rabi)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&order, &w)| {
            let center = 2.0 * PI * f_rot * order as f64;
            let lines = dist
                .iter()
                .map(|(l, p)| (p, geometry.transition_detuning(l, dist.l0(), order)))
                .collect();
            (w, center, lines)
        })
        .collect();

    let t = request.probe_time;
    let excitation = request
        .detuning_grid
        .par_iter()
        .map(|&scan| {
            let total: f64 = groups
                .iter()
                .map(|(w, center, lines)| {
                    lines
                        .iter()
                        .map(|&(p, delta_l)| {
                            p * detuned_rabi_probability(*w, scan - center + delta_l, t)
                        })
                        .sum::<f64>()
                })
                .sum();
            total.clamp(0.0, 1.0)
        })
        .collect();

    let highest = orders.iter().map(|o| o.abs()).max().unwrap_or(0);
    let resolvable = geometry.max_resolvable_order(dist.sigma_l(), f_rot)?;
    Ok(SpectrumScan {
        detuning_grid: request.detuning_grid.clone(),
        probe_time: request.probe_time,
        included_orders: orders.clone(),
        excitation,
        groups_overlap: highest > resolvable,
    })
}
