//! Static properties of the two-ion rotor: equilibrium geometry, rotor
//! constant, energy ladder and sideband-group bookkeeping.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{self, BOLTZMANN, HBAR};
use crate::error::{Result, RotorError};

/// Largest order [`RotorGeometry::max_resolvable_order`] will ever report.
/// Reached only when the group width vanishes.
pub const RESOLVABLE_ORDER_CAP: i64 = 1_000_000;

/// Ion-crystal geometry in the rigid-rotor approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorGeometry {
    /// kg
    pub ion_mass: f64,
    /// In-plane secular frequency, rad/s.
    pub omega_x: f64,
    /// Vertical secular frequency, rad/s. Kept for reference only; the
    /// motion is confined to the plane.
    pub omega_z: f64,
    /// Equilibrium radius of each ion about the trap center, m.
    pub r_e: f64,
    /// Rotor constant ħ/(4 m r_e²), rad/s.
    pub omega_r: f64,
    /// 2 m r_e², kg·m².
    pub moment_of_inertia: f64,
}

impl RotorGeometry {
    pub fn new(ion_mass: f64, omega_x: f64, omega_z: f64) -> Result<Self> {
        let r_e = equilibrium_radius(ion_mass, omega_x)?;
        let omega_r = rotor_constant(ion_mass, r_e)?;
        Ok(Self {
            ion_mass,
            omega_x,
            omega_z,
            r_e,
            omega_r,
            moment_of_inertia: 2.0 * ion_mass * r_e * r_e,
        })
    }

    /// Two ⁴⁰Ca⁺ ions at ω_x = 2π×845 kHz, ω_z = 2ω_x.
    pub fn calcium_reference() -> Self {
        let omega_x = 2.0 * PI * constants::REFERENCE_OMEGA_X_HZ;
        Self::new(constants::ca40_ion_mass(), omega_x, 2.0 * omega_x)
            .expect("reference parameters are valid")
    }

    /// Distance between the two ions, m.
    pub fn ion_separation(&self) -> f64 {
        2.0 * self.r_e
    }

    /// E_ℓ = ħ ω_r ℓ², J.
    pub fn rotational_energy(&self, l: i64) -> f64 {
        let l = l as f64;
        HBAR * self.omega_r * l * l
    }

    /// Detuning δ_ℓ = 2 ω_r (l0 − ℓ) Δℓ of the |ℓ⟩ → |ℓ+Δℓ⟩ line from the
    /// center of its sideband group, rad/s.
    pub fn transition_detuning(&self, l: i64, l0: f64, delta_l: i64) -> f64 {
        2.0 * self.omega_r * (l0 - l as f64) * delta_l as f64
    }

    /// Mean angular-momentum quantum number ℓ0 of a crystal rotating at
    /// `f_rot` (Hz): 2π f_rot = 2 ω_r ℓ0.
    pub fn mean_quantum_number(&self, f_rot: f64) -> Result<f64> {
        if !(f_rot >= 0.0) {
            return Err(RotorError::domain(format!("f_rot must be >= 0, got {f_rot}")));
        }
        Ok(2.0 * PI * f_rot / (2.0 * self.omega_r))
    }

    /// Rotation frequency (Hz) corresponding to mean quantum number `l0`.
    pub fn rotation_frequency(&self, l0: f64) -> f64 {
        2.0 * self.omega_r * l0 / (2.0 * PI)
    }

    /// Width σ_ℓ of the thermal angular-momentum distribution at
    /// temperature `temperature` (K), from ħ ω_r σ_ℓ² = ½ k_B T.
    pub fn thermal_sigma(&self, temperature: f64) -> Result<f64> {
        if !(temperature >= 0.0) {
            return Err(RotorError::domain(format!(
                "temperature must be >= 0, got {temperature}"
            )));
        }
        Ok((BOLTZMANN * temperature / (2.0 * HBAR * self.omega_r)).sqrt())
    }

    /// Spectral width γ_ℓ = 4 ω_r σ_ℓ Δℓ of a sideband group, rad/s.
    pub fn group_width(&self, sigma_l: f64, delta_l: i64) -> Result<f64> {
        if !(sigma_l >= 0.0) {
            return Err(RotorError::domain(format!("sigma_l must be >= 0, got {sigma_l}")));
        }
        Ok(4.0 * self.omega_r * sigma_l * (delta_l as f64).abs())
    }

    /// Largest sideband order Δℓ whose group stays separated from group
    /// Δℓ+1 with two standard deviations of each group between them:
    /// `2·(2ω_r Δℓ σ) + 2·(2ω_r (Δℓ+1) σ) ≤ 2π f_rot`.
    ///
    /// Returns 0 when no order qualifies and [`RESOLVABLE_ORDER_CAP`] when
    /// `sigma_l` is zero.
    pub fn max_resolvable_order(&self, sigma_l: f64, f_rot: f64) -> Result<i64> {
        if !(sigma_l >= 0.0) || !(f_rot >= 0.0) {
            return Err(RotorError::domain(format!(
                "need sigma_l >= 0 and f_rot >= 0, got {sigma_l}, {f_rot}"
            )));
        }
        let per_order = 4.0 * self.omega_r * sigma_l;
        if per_order == 0.0 {
            return Ok(RESOLVABLE_ORDER_CAP);
        }
        // per_order·(2Δℓ + 1) ≤ 2π f_rot
        let bound = (2.0 * PI * f_rot / per_order - 1.0) / 2.0;
        if bound < 0.0 {
            return Ok(0);
        }
        Ok((bound.floor() as i64).min(RESOLVABLE_ORDER_CAP))
    }
}

/// Equilibrium radius [e²/(16πε₀ m ω_x²)]^(1/3) of each ion in a
/// two-ion ring, m.
pub fn equilibrium_radius(ion_mass: f64, omega_x: f64) -> Result<f64> {
    if !(ion_mass > 0.0) || !(omega_x > 0.0) {
        return Err(RotorError::domain(format!(
            "ion mass and omega_x must be positive, got {ion_mass}, {omega_x}"
        )));
    }
    let e2 = constants::ELEMENTARY_CHARGE * constants::ELEMENTARY_CHARGE;
    Ok((e2 / (16.0 * PI * constants::VACUUM_PERMITTIVITY * ion_mass * omega_x * omega_x)).cbrt())
}

/// Rotor constant ħ/(4 m r_e²), rad/s.
pub fn rotor_constant(ion_mass: f64, r_e: f64) -> Result<f64> {
    if !(ion_mass > 0.0) || !(r_e > 0.0) {
        return Err(RotorError::domain(format!(
            "ion mass and radius must be positive, got {ion_mass}, {r_e}"
        )));
    }
    Ok(HBAR / (4.0 * ion_mass * r_e * r_e))
}

/// Radial (stretch) mode frequency √3 ω_x.
pub fn stretch_frequency(omega_x: f64) -> f64 {
    3f64.sqrt() * omega_x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ca40_ion_mass;

    const TWO_PI: f64 = 2.0 * PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reference_radius_and_separation() {
        let g = RotorGeometry::calcium_reference();
        assert!(rel(g.r_e, 3.13e-6) < 0.005, "r_e = {}", g.r_e);
        assert!(rel(g.ion_separation(), 6.27e-6) < 0.005);
    }

    #[test]
    fn radius_scales_as_minus_two_thirds() {
        let m = ca40_ion_mass();
        let a = equilibrium_radius(m, 1e6).unwrap();
        let b = equilibrium_radius(m, 2e6).unwrap();
        assert!(rel(a / b, 2f64.powf(2.0 / 3.0)) < 1e-14);
    }

    #[test]
    fn non_positive_inputs_rejected() {
        assert!(equilibrium_radius(0.0, 1.0).is_err());
        assert!(equilibrium_radius(1.0, -1.0).is_err());
        assert!(rotor_constant(1.0, 0.0).is_err());
        assert!(rotor_constant(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn rotor_constant_values() {
        let m = ca40_ion_mass();
        assert!(rel(rotor_constant(m, 3.13e-6).unwrap(), TWO_PI * 6.43) < 0.01);
        let w1 = rotor_constant(m, 3.13e-6).unwrap();
        let w2 = rotor_constant(m, 6.26e-6).unwrap();
        assert!(rel(w2, w1 / 4.0) < 1e-14);
        let g = RotorGeometry::calcium_reference();
        assert!((g.omega_r / TWO_PI - 6.43).abs() < 0.1);
    }

    #[test]
    fn geometry_invariants() {
        let g = RotorGeometry::calcium_reference();
        assert_eq!(g.moment_of_inertia, 2.0 * g.ion_mass * g.r_e * g.r_e);
        assert!(rel(g.omega_r, HBAR / (4.0 * g.ion_mass * g.r_e * g.r_e)) < 1e-12);
    }

    #[test]
    fn energy_ladder() {
        let g = RotorGeometry::calcium_reference();
        assert_eq!(g.rotational_energy(0), 0.0);
        for l in [1, 17, 7776] {
            assert_eq!(g.rotational_energy(l), g.rotational_energy(-l));
        }
        let e = g.rotational_energy(7776);
        assert!(rel(e, HBAR * 40.4 * 7776.0 * 7776.0) < 0.005, "{e}");
        // ħ·(40.4046 rad/s)·7776² evaluated independently.
        assert!(rel(e, 2.5765e-25) < 1e-3, "{e}");
    }

    #[test]
    fn detuning_examples() {
        let g = RotorGeometry::calcium_reference();
        assert_eq!(g.transition_detuning(100, 100.0, 3), 0.0);
        let d1 = g.transition_detuning(99, 100.0, 1);
        assert!(rel(d1, TWO_PI * 12.9) < 0.01);
        assert!(rel(g.transition_detuning(99, 100.0, 4), 8.0 * g.omega_r) < 1e-14);
    }

    #[test]
    fn mean_quantum_number_examples() {
        let g = RotorGeometry::calcium_reference();
        let l0 = g.mean_quantum_number(100e3).unwrap();
        assert!(rel(l0, 7780.0) < 0.01, "{l0}");
        assert_eq!(g.mean_quantum_number(0.0).unwrap(), 0.0);
        assert!(rel(g.mean_quantum_number(50e3).unwrap(), l0 / 2.0) < 1e-14);
        assert!(g.mean_quantum_number(-1.0).is_err());
        assert!(rel(g.rotation_frequency(l0), 100e3) < 1e-14);
    }

    #[test]
    fn thermal_sigma_examples() {
        let g = RotorGeometry::calcium_reference();
        assert!(rel(g.thermal_sigma(0.52e-3).unwrap(), 920.0) < 0.02);
        assert_eq!(g.thermal_sigma(0.0).unwrap(), 0.0);
        assert!(rel(g.thermal_sigma(2.08e-3).unwrap(), 1840.0) < 0.02);
    }

    #[test]
    fn stretch_examples() {
        let w = TWO_PI * 845e3;
        assert!(rel(stretch_frequency(w), TWO_PI * 1463.6e3) < 1e-4);
        assert_eq!(stretch_frequency(0.0), 0.0);
        assert!(rel(stretch_frequency(123.0) / 123.0, 3f64.sqrt()) < 1e-15);
    }

    #[test]
    fn group_width_examples() {
        let g = RotorGeometry::calcium_reference();
        assert!(rel(g.group_width(42.7, 1).unwrap(), TWO_PI * 1.10e3) < 0.03);
        assert_eq!(g.group_width(0.0, 3).unwrap(), 0.0);
        assert!(rel(g.group_width(45.6, 4).unwrap(), TWO_PI * 4.7e3) < 0.05);
        assert!(g.group_width(-1.0, 1).is_err());
    }

    #[test]
    fn resolvable_order_examples() {
        let g = RotorGeometry::calcium_reference();
        assert_eq!(g.max_resolvable_order(400.0, 100e3).unwrap(), 4);
        assert_eq!(g.max_resolvable_order(45.6, 100e3).unwrap(), 42);
        // Boundary-sensitive: the rounded σ_ℓ = 46 falls just below 42.
        assert_eq!(g.max_resolvable_order(46.0, 100e3).unwrap(), 41);
        assert_eq!(g.max_resolvable_order(0.0, 100e3).unwrap(), RESOLVABLE_ORDER_CAP);
        assert_eq!(g.max_resolvable_order(1e-300, 100e3).unwrap(), RESOLVABLE_ORDER_CAP);
        assert_eq!(g.max_resolvable_order(1e6, 100e3).unwrap(), 0);
    }
}
