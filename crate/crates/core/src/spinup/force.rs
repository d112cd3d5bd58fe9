use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SpinUpWaveform;
use crate::constants::coulomb_strength;
use crate::error::{Result, RotorError};
use crate::RotorGeometry;

/// In-plane positions and velocities of both ions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    /// m
    pub positions: [[f64; 2]; 2],
    /// m/s
    pub velocities: [[f64; 2]; 2],
    /// s
    pub time: f64,
}

impl ClassicalState {
    /// Ion 1 at +r(cos φ, sin φ), ion 2 opposite, rigidly rotating about the
    /// origin at angular velocity `omega`.
    pub fn rigid(radius: f64, angle: f64, omega: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let p = [radius * c, radius * s];
        let v = [-omega * radius * s, omega * radius * c];
        Self {
            positions: [p, [-p[0], -p[1]]],
            velocities: [v, [-v[0], -v[1]]],
            time: 0.0,
        }
    }

    /// r₁ − r₂
    pub fn relative(&self) -> [f64; 2] {
        let [a, b] = self.positions;
        [a[0] - b[0], a[1] - b[1]]
    }

    pub fn relative_velocity(&self) -> [f64; 2] {
        let [a, b] = self.velocities;
        [a[0] - b[0], a[1] - b[1]]
    }

    pub fn separation(&self) -> f64 {
        let r = self.relative();
        r[0].hypot(r[1])
    }

    /// Orientation of the ion pair, rad in (−π, π].
    pub fn orientation(&self) -> f64 {
        let r = self.relative();
        r[1].atan2(r[0])
    }

    /// Angular momentum of the relative (rotor) coordinate, µ·(r × ṙ) with µ = m/2.
    pub fn rotor_angular_momentum(&self, ion_mass: f64) -> f64 {
        let r = self.relative();
        let v = self.relative_velocity();
        0.5 * ion_mass * (r[0] * v[1] - r[1] * v[0])
    }

    /// Σ m (x v_y − y v_x) over both ions.
    pub fn total_angular_momentum(&self, ion_mass: f64) -> f64 {
        self.positions
            .iter()
            .zip(&self.velocities)
            .map(|(p, v)| ion_mass * (p[0] * v[1] - p[1] * v[0]))
            .sum()
    }

    /// Instantaneous angular velocity of the pair axis, rad/s.
    pub fn rotation_rate(&self) -> f64 {
        let r = self.relative();
        let v = self.relative_velocity();
        (r[0] * v[1] - r[1] * v[0]) / (r[0] * r[0] + r[1] * r[1])
    }

    pub fn kinetic_energy(&self, ion_mass: f64) -> f64 {
        self.velocities
            .iter()
            .map(|v| 0.5 * ion_mass * (v[0] * v[0] + v[1] * v[1]))
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.positions
            .iter()
            .chain(&self.velocities)
            .flatten()
            .all(|x| x.is_finite())
    }
}

/// Accelerations of both ions at time `t`: isotropic pseudopotential
/// ½mω_x²ρ², rotating quadrupole −½mε(t)[(x²−y²)cos 2α0 + 2xy sin 2α0]
/// (weak axis along α0, so the pinned crystal points along α0) and mutual
/// Coulomb repulsion.
pub fn force_field(
    state: &ClassicalState,
    waveform: &SpinUpWaveform,
    t: f64,
    geometry: &RotorGeometry,
) -> Result<[[f64; 2]; 2]> {
    let (eps, alpha) = waveform.quadrupole(t);
    accelerations(state, eps, alpha, geometry, t)
}

#[inline]
pub(crate) fn accelerations(
    state: &ClassicalState,
    eps: f64,
    alpha: f64,
    geometry: &RotorGeometry,
    t: f64,
) -> Result<[[f64; 2]; 2]> {
    let wx2 = geometry.omega_x * geometry.omega_x;
    let (s2, c2) = (2.0 * alpha).sin_cos();
    let rel = state.relative();
    let d2 = rel[0] * rel[0] + rel[1] * rel[1];
    if !(d2 > 0.0) {
        return Err(RotorError::Singularity { time: t });
    }
    let coulomb = coulomb_strength() / geometry.ion_mass / (d2 * d2.sqrt());
    let mut acc = [[0.0; 2]; 2];
    for (i, (a, p)) in acc.iter_mut().zip(&state.positions).enumerate() {
        let sign = if i == 0 { 1.0 } else { -1.0 };
        a[0] = -wx2 * p[0] + eps * (p[0] * c2 + p[1] * s2) + sign * coulomb * rel[0];
        a[1] = -wx2 * p[1] + eps * (p[0] * s2 - p[1] * c2) + sign * coulomb * rel[1];
    }
    Ok(acc)
}

/// Total potential energy (trap, quadrupole, Coulomb), J.
pub fn potential_energy(
    state: &ClassicalState,
    waveform: &SpinUpWaveform,
    t: f64,
    geometry: &RotorGeometry,
) -> Result<f64> {
    let (eps, alpha) = waveform.quadrupole(t);
    let m = geometry.ion_mass;
    let wx2 = geometry.omega_x * geometry.omega_x;
    let (s2, c2) = (2.0 * alpha).sin_cos();
    let d = state.separation();
    if !(d > 0.0) {
        return Err(RotorError::Singularity { time: t });
    }
    let external: f64 = state
        .positions
        .iter()
        .map(|p| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            let quad = (p[0] * p[0] - p[1] * p[1]) * c2 + 2.0 * p[0] * p[1] * s2;
            0.5 * m * (wx2 * r2 - eps * quad)
        })
        .sum();
    Ok(external + coulomb_strength() / d)
}

/// Radius of each ion when pinned by a static quadrupole of curvature `eps`.
pub fn pinned_radius(geometry: &RotorGeometry, eps: f64) -> Result<f64> {
    let confinement = geometry.omega_x * geometry.omega_x - eps;
    if !(confinement > 0.0) {
        return Err(RotorError::domain(format!(
            "quadrupole curvature {eps:e} deconfines the crystal (ω_x² = {:e})",
            geometry.omega_x * geometry.omega_x
        )));
    }
    Ok((coulomb_strength() / (4.0 * geometry.ion_mass * confinement)).cbrt())
}

/// Radius of each ion in steady free rotation at `f_rot` (Hz), from the
/// force balance m(ω_x² − Ω²)r = e²/(4πε₀·4r²).
pub fn rotating_radius(geometry: &RotorGeometry, f_rot: f64) -> Result<f64> {
    let w = 2.0 * PI * f_rot;
    let confinement = geometry.omega_x * geometry.omega_x - w * w;
    if !(confinement > 0.0) {
        return Err(RotorError::domain(format!(
            "rotation at {f_rot} Hz exceeds the trap frequency"
        )));
    }
    Ok((coulomb_strength() / (4.0 * geometry.ion_mass * confinement)).cbrt())
}

/// Crystal at rest along the quadrupole axis at the start of `waveform`.
pub fn pinned_equilibrium(geometry: &RotorGeometry, waveform: &SpinUpWaveform) -> Result<ClassicalState> {
    let (eps, alpha) = waveform.quadrupole(0.0);
    let r = pinned_radius(geometry, eps)?;
    Ok(ClassicalState::rigid(r, alpha, 0.0))
}
