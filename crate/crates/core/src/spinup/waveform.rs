use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Result, RotorError};

/// Time the crystal is held pinned before the ramp starts, s.
pub const DEFAULT_PIN_HOLD: f64 = 10e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Pin,
    Accelerate,
    Release,
    Free,
}

/// Electrode schedule of the spin-up protocol.
///
/// The quadrupole orientation α0(t) is constant during the pin hold,
/// quadratic during the ramp (constant angular acceleration up to
/// 2π·f_target), and linear afterwards. The amplitude is 1 until the ramp
/// ends and then falls linearly to 0 over `t_release`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinUpWaveform {
    /// Hz
    pub f_target: f64,
    pub t_pin: f64,
    pub t_spin: f64,
    pub t_release: f64,
    /// Tilt-mode frequency of the pinned crystal at full amplitude, rad/s.
    pub omega_tilt: f64,
    /// Quadrupole curvature ε = ω_tilt²/2, rad²/s².
    pub quad_strength: f64,
    /// Per-electrode phase offsets α_i, each π/4 ahead of its clockwise
    /// neighbour.
    pub phase_offsets: [f64; 8],
}

/// One row of the exported electrode schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformSample {
    pub time: f64,
    pub alpha0: f64,
    pub amplitude: f64,
    pub voltages: [f64; 8],
}

/// Three-stage waveform with the default pin hold.
pub fn build_waveform(f_target: f64, t_spin: f64, t_release: f64, omega_tilt: f64) -> Result<SpinUpWaveform> {
    if !(t_spin > 0.0) || !(t_release > 0.0) {
        return Err(RotorError::domain(format!(
            "spin and release times must be > 0, got {t_spin}, {t_release}"
        )));
    }
    if !(f_target >= 0.0) || !f_target.is_finite() {
        return Err(RotorError::domain(format!("target frequency must be >= 0, got {f_target}")));
    }
    if !(omega_tilt > 0.0) || !omega_tilt.is_finite() {
        return Err(RotorError::domain(format!("tilt frequency must be > 0, got {omega_tilt}")));
    }
    let mut phase_offsets = [0.0; 8];
    for (i, a) in phase_offsets.iter_mut().enumerate() {
        *a = i as f64 * FRAC_PI_4;
    }
    Ok(SpinUpWaveform {
        f_target,
        t_pin: DEFAULT_PIN_HOLD,
        t_spin,
        t_release,
        omega_tilt,
        quad_strength: 0.5 * omega_tilt * omega_tilt,
        phase_offsets,
    })
}

impl SpinUpWaveform {
    pub fn with_pin_hold(mut self, t_pin: f64) -> Self {
        self.t_pin = t_pin.max(0.0);
        self
    }

    /// A waveform whose quadrupole is permanently off, for free-rotation runs.
    pub fn unpowered(duration: f64) -> Self {
        Self {
            f_target: 0.0,
            t_pin: duration,
            t_spin: 0.0,
            t_release: 0.0,
            omega_tilt: 0.0,
            quad_strength: 0.0,
            phase_offsets: [0.0; 8],
        }
    }

    pub fn total_duration(&self) -> f64 {
        self.t_pin + self.t_spin + self.t_release
    }

    fn target_rate(&self) -> f64 {
        2.0 * PI * self.f_target
    }

    pub fn stage(&self, t: f64) -> Stage {
        if t < self.t_pin {
            Stage::Pin
        } else if t < self.t_pin + self.t_spin {
            Stage::Accelerate
        } else if t < self.total_duration() {
            Stage::Release
        } else {
            Stage::Free
        }
    }

    /// Quadrupole orientation α0(t), rad.
    pub fn alpha0(&self, t: f64) -> f64 {
        let w = self.target_rate();
        if t <= self.t_pin {
            return 0.0;
        }
        let tr = t - self.t_pin;
        if tr <= self.t_spin {
            0.5 * w / self.t_spin * tr * tr
        } else {
            0.5 * w * self.t_spin + w * (tr - self.t_spin)
        }
    }

    /// dα0/dt, rad/s.
    pub fn alpha0_rate(&self, t: f64) -> f64 {
        let w = self.target_rate();
        if t <= self.t_pin {
            0.0
        } else if t - self.t_pin <= self.t_spin {
            w * (t - self.t_pin) / self.t_spin
        } else {
            w
        }
    }

    /// Normalized quadrupole amplitude in [0, 1].
    pub fn amplitude(&self, t: f64) -> f64 {
        let release_start = self.t_pin + self.t_spin;
        if self.quad_strength == 0.0 {
            0.0
        } else if t <= release_start {
            1.0
        } else if t >= self.total_duration() {
            0.0
        } else {
            (1.0 - (t - release_start) / self.t_release).max(0.0)
        }
    }

    /// Effective quadrupole curvature ε·A(t) and orientation α0(t).
    pub(crate) fn quadrupole(&self, t: f64) -> (f64, f64) {
        (self.quad_strength * self.amplitude(t), self.alpha0(t))
    }

    /// Electrode voltages A(t)·cos(α0(t) + α_i), normalized to unit full amplitude.
    pub fn voltages(&self, t: f64) -> [f64; 8] {
        let a = self.amplitude(t);
        let alpha = self.alpha0(t);
        let mut v = [0.0; 8];
        for (out, off) in v.iter_mut().zip(&self.phase_offsets) {
            *out = a * (alpha + off).cos();
        }
        v
    }

    pub fn sample(&self, t: f64) -> WaveformSample {
        WaveformSample {
            time: t,
            alpha0: self.alpha0(t),
            amplitude: self.amplitude(t),
            voltages: self.voltages(t),
        }
    }

    /// `n` evenly spaced samples over the full schedule, endpoints included.
    pub fn samples(&self, n: usize) -> Vec<WaveformSample> {
        let n = n.max(2);
        let total = self.total_duration();
        (0..n)
            .map(|i| self.sample(total * i as f64 / (n - 1) as f64))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> SpinUpWaveform {
        build_waveform(100e3, 50e-6, 1e-3, 2.0 * PI * 280e3).unwrap()
    }

    #[test]
    fn ramp_reaches_target_rate() {
        let w = reference();
        let end = w.t_pin + w.t_spin;
        assert!((w.alpha0_rate(end) - 2.0 * PI * 100e3).abs() < 1e-6);
        // Numerical derivative agrees.
        let h = 1e-10;
        let num = (w.alpha0(end - h) - w.alpha0(end - 2.0 * h)) / h;
        assert!((num / (2.0 * PI * 100e3) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn ramp_phase_is_constant_acceleration() {
        let w = reference();
        let gained = w.alpha0(w.t_pin + w.t_spin) - w.alpha0(w.t_pin);
        assert!((gained - PI * 100e3 * 50e-6).abs() < 1e-12);
    }

    #[test]
    fn phase_and_rate_continuous_at_boundaries() {
        let w = reference();
        for b in [w.t_pin, w.t_pin + w.t_spin, w.total_duration()] {
            let eps = 1e-15;
            assert!((w.alpha0(b + eps) - w.alpha0(b - eps)).abs() < 1e-6);
            assert!((w.alpha0_rate(b + eps) - w.alpha0_rate(b - eps)).abs() < 1e-2);
        }
    }

    #[test]
    fn amplitude_schedule() {
        let w = reference();
        assert_eq!(w.amplitude(0.0), 1.0);
        assert_eq!(w.amplitude(w.t_pin + w.t_spin), 1.0);
        let mid = w.t_pin + w.t_spin + 0.5 * w.t_release;
        assert!((w.amplitude(mid) - 0.5).abs() < 1e-12);
        assert_eq!(w.amplitude(w.total_duration()), 0.0);
        assert_eq!(w.amplitude(w.total_duration() + 1.0), 0.0);
        for s in w.samples(1001) {
            assert!(s.amplitude >= 0.0 && s.amplitude <= 1.0);
        }
        assert_eq!(w.samples(10).last().unwrap().amplitude, 0.0);
    }

    #[test]
    fn static_target_only_ramps_amplitude() {
        let w = build_waveform(0.0, 50e-6, 1e-3, 1e6).unwrap();
        for s in w.samples(101) {
            assert_eq!(s.alpha0, 0.0);
        }
        assert_eq!(w.amplitude(w.total_duration()), 0.0);
    }

    #[test]
    fn electrode_phases_step_by_quarter_pi() {
        let w = reference();
        for pair in w.phase_offsets.windows(2) {
            assert!((pair[1] - pair[0] - FRAC_PI_4).abs() < 1e-15);
        }
        let v = w.voltages(0.0);
        assert!((v[2] - (PI / 2.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn invalid_durations_rejected() {
        assert!(build_waveform(1e5, 0.0, 1e-3, 1e6).is_err());
        assert!(build_waveform(1e5, 1e-5, -1.0, 1e6).is_err());
        assert!(build_waveform(-1.0, 1e-5, 1e-3, 1e6).is_err());
        assert!(build_waveform(1e5, 1e-5, 1e-3, 0.0).is_err());
    }
}
