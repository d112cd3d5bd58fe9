//! CODATA 2018 physical constants (SI) and ⁴⁰Ca⁺ reference parameters.

use std::f64::consts::PI;

/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817_00e-34;
/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Atomic mass constant, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Electron mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

/// Atomic mass of neutral ⁴⁰Ca, u.
pub const CA40_ATOMIC_MASS_U: f64 = 39.9626;
/// Secular frequency of the reference trap, Hz (ω_x / 2π).
pub const REFERENCE_OMEGA_X_HZ: f64 = 845e3;
/// S₁/₂ → D₅/₂ qubit transition wavelength, m.
pub const QUBIT_WAVELENGTH: f64 = 729e-9;

/// Coulomb constant e²/(4πε₀), J·m.
pub fn coulomb_strength() -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (4.0 * PI * VACUUM_PERMITTIVITY)
}

/// Ion mass from a neutral atomic mass in u, with one electron removed.
pub fn ion_mass_from_u(mass_u: f64) -> f64 {
    mass_u * ATOMIC_MASS_UNIT - ELECTRON_MASS
}

/// Mass of a ⁴⁰Ca⁺ ion, kg.
pub fn ca40_ion_mass() -> f64 {
    ion_mass_from_u(CA40_ATOMIC_MASS_U)
}
