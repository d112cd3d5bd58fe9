//! Laser addressing of rotational sidebands.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::bessel::bessel_j;
use crate::error::{Result, RotorError};

/// Excitation laser as seen by the rotor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserDrive {
    /// m
    pub wavelength: f64,
    /// Angle between the wavevector and the rotor plane, rad, in [0, π/2].
    pub theta: f64,
    /// In-plane wavevector projection (2π/λ)·cos θ, rad/m.
    pub kx: f64,
    /// Resonant Rabi frequency Ω of the addressed order, rad/s.
    pub omega_rabi: f64,
    /// Addressed sideband order Δℓ.
    pub delta_l: i64,
    /// Laser detuning from the center of the addressed group, rad/s.
    pub detuning: f64,
}

impl LaserDrive {
    pub fn new(wavelength: f64, theta: f64, omega_rabi: f64, delta_l: i64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(RotorError::domain(format!("wavelength must be > 0, got {wavelength}")));
        }
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return Err(RotorError::domain(format!("theta must lie in [0, π/2], got {theta}")));
        }
        Ok(Self {
            wavelength,
            theta,
            kx: in_plane_wavevector(wavelength, theta),
            omega_rabi,
            delta_l,
            detuning: 0.0,
        })
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn with_order(mut self, delta_l: i64) -> Self {
        self.delta_l = delta_l;
        self
    }

    /// Lamb-Dicke-like argument k_x·r_e.
    pub fn coupling_argument(&self, r_e: f64) -> f64 {
        self.kx * r_e
    }

    /// Relative coupling ⟨ℓ+Δℓ| e^{i k_x x} |ℓ⟩ = J_Δℓ(k_x r_e). Independent of ℓ.
    pub fn coupling_strength(&self, r_e: f64) -> f64 {
        coupling_strength(self.delta_l, self.coupling_argument(r_e))
    }

    /// Highest order with appreciable coupling, round(k_x r_e).
    pub fn max_coupled_order(&self, r_e: f64) -> i64 {
        self.coupling_argument(r_e).round() as i64
    }
}

/// (2π/λ)·cos θ
pub fn in_plane_wavevector(wavelength: f64, theta: f64) -> f64 {
    // cos(π/2) is 6e-17 in floating point; pin the perpendicular case to 0.
    if theta == FRAC_PI_2 {
        return 0.0;
    }
    2.0 * PI / wavelength * theta.cos()
}

/// J_Δℓ(x)
pub fn coupling_strength(delta_l: i64, argument: f64) -> f64 {
    bessel_j(delta_l as i32, argument)
}

/// Angle θ for which round-free k_x·r_e equals `order`; inverse of
/// [`LaserDrive::max_coupled_order`]. Clamped to [0, π/2].
pub fn theta_for_coupled_order(order: f64, wavelength: f64, r_e: f64) -> f64 {
    let k = 2.0 * PI / wavelength;
    (order / (k * r_e)).clamp(0.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_j_table;
    use crate::RotorGeometry;

    #[test]
    fn kx_projection() {
        let d = LaserDrive::new(729e-9, 0.3, 1.0, 1).unwrap();
        let want = 2.0 * PI / 729e-9 * 0.3f64.cos();
        assert!(((d.kx - want) / want).abs() < 1e-12);
        assert!(LaserDrive::new(729e-9, -0.1, 1.0, 1).is_err());
        assert!(LaserDrive::new(729e-9, 1.6, 1.0, 1).is_err());
        assert!(LaserDrive::new(0.0, 0.1, 1.0, 1).is_err());
    }

    #[test]
    fn perpendicular_beam_only_drives_carrier() {
        let d = LaserDrive::new(729e-9, FRAC_PI_2, 1.0, 0).unwrap();
        assert_eq!(d.coupling_strength(3.13e-6), 1.0);
        for n in [-3, -1, 1, 2, 5] {
            assert_eq!(d.with_order(n).coupling_strength(3.13e-6), 0.0);
        }
        assert_eq!(d.max_coupled_order(3.13e-6), 0);
    }

    #[test]
    fn max_order_at_reference_angles() {
        let r_e = 3.13e-6;
        let flat = LaserDrive::new(729e-9, 0.0, 1.0, 0).unwrap();
        assert_eq!(flat.max_coupled_order(r_e), 27);
        let tilted = LaserDrive::new(729e-9, 82.4f64.to_radians(), 1.0, 0).unwrap();
        assert!((tilted.coupling_argument(r_e) - 3.57).abs() < 0.01);
        assert_eq!(tilted.max_coupled_order(r_e), 4);
        // Beyond the 5th order the coupling is negligible.
        for n in 6..15 {
            assert!(tilted.with_order(n).coupling_strength(r_e).abs() < 0.05);
        }
        let g = RotorGeometry::calcium_reference();
        assert_eq!(flat.max_coupled_order(g.r_e), 27);
        assert_eq!(tilted.max_coupled_order(g.r_e), 4);
    }

    #[test]
    fn theta_inversion() {
        let r_e = 3.13e-6;
        let th = theta_for_coupled_order(4.0, 729e-9, r_e);
        let d = LaserDrive::new(729e-9, th, 1.0, 0).unwrap();
        assert!((d.coupling_argument(r_e) - 4.0).abs() < 1e-10);
    }

    #[test]
    fn coupling_independent_of_distribution_and_l() {
        // Nothing in the coupling depends on ℓ or σ_ℓ: same drive, same value.
        let d = LaserDrive::new(729e-9, 1.4, 1.0, 3).unwrap();
        let a = d.coupling_strength(3.13e-6);
        let b = bessel_j_table(3, d.coupling_argument(3.13e-6))[3];
        assert_eq!(a, b);
    }
}
