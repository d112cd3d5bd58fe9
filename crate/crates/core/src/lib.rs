//! Simulation and analysis of the rotational degree of freedom of a two-ion
//! Coulomb crystal.
//!
//! The crate is organized bottom-up:
//!
//! * [`rotor`], [`bessel`], [`distribution`] and [`drive`] hold the static
//!   physics: geometry, energy ladder, sideband couplings and resolvability.
//! * [`dynamics`] turns those into excitation signals (sideband spectra,
//!   thermal Rabi traces, Ramsey fringes).
//! * [`spinup`] simulates the classical pin/accelerate/release protocol that
//!   prepares the rotating crystal.
//! * [`fitting`] estimates model parameters from traces with a damped
//!   Gauss-Newton solver.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod constants;
pub mod distribution;
pub mod drive;
pub mod dynamics;
mod error;
pub mod fitting;
pub mod rotor;
pub mod spinup;

pub use distribution::AngularDistribution;
pub use drive::LaserDrive;
pub use error::{Result, RotorError};
pub use rotor::RotorGeometry;
