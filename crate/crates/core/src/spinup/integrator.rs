use std::f64::consts::PI;

use super::force::{accelerations, potential_energy};
use super::{ClassicalState, SpinUpWaveform};
use crate::error::{Result, RotorError};
use crate::RotorGeometry;

/// Relative energy drift in a field-free segment above which the run is
/// declared unstable.
const MAX_FREE_ENERGY_DRIFT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegrationOptions {
    /// Keep every n-th state; 0 keeps only the final state.
    pub sample_every: usize,
}

/// Statistics gathered while the quadrupole is off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeSegment {
    pub start_time: f64,
    pub duration: f64,
    /// Largest |E − E₀|/|E₀| over the segment.
    pub max_energy_drift: f64,
    /// |L_end − L_start|/|L_start| of the rotor coordinate.
    pub angular_momentum_drift: f64,
    /// Mean angular velocity of the pair axis, rad/s (unwrapped phase / time).
    pub mean_rotation_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<ClassicalState>,
    pub final_state: ClassicalState,
    pub free_segment: Option<FreeSegment>,
}

/// Largest admissible step: 1/(200·f_fast) with f_fast the fastest of the
/// target rotation, secular and tilt frequencies.
pub fn max_stable_dt(waveform: &SpinUpWaveform, geometry: &RotorGeometry) -> f64 {
    let fastest = waveform
        .f_target
        .max(geometry.omega_x / (2.0 * PI))
        .max(waveform.omega_tilt / (2.0 * PI));
    1.0 / (200.0 * fastest)
}

/// Working step 1/(500·f_fast), comfortably inside [`max_stable_dt`].
pub fn default_dt(waveform: &SpinUpWaveform, geometry: &RotorGeometry) -> f64 {
    max_stable_dt(waveform, geometry) * 200.0 / 500.0
}

/// Velocity-Verlet propagation from `initial.time` to `t_end` with fixed
/// step `dt` (the final step is shortened to land on `t_end`).
pub fn integrate_trajectory(
    initial: &ClassicalState,
    waveform: &SpinUpWaveform,
    geometry: &RotorGeometry,
    dt: f64,
    t_end: f64,
    options: IntegrationOptions,
) -> Result<Trajectory> {
    let limit = max_stable_dt(waveform, geometry);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(RotorError::domain(format!("dt must lie in (0, {limit:e}], got {dt:e}")));
    }
    if !initial.is_finite() {
        return Err(RotorError::domain("initial state is not finite"));
    }
    let m = geometry.ion_mass;
    let mut state = *initial;
    let mut t = state.time;
    let (eps, alpha) = waveform.quadrupole(t);
    let mut acc = accelerations(&state, eps, alpha, geometry, t)?;
    let mut samples = Vec::new();
    if options.sample_every > 0 {
        samples.push(state);
    }

    let mut free: Option<FreeTracker> = None;
    let mut step = 0usize;
    while t < t_end {
        if free.is_none() && waveform.amplitude(t) == 0.0 {
            free = Some(FreeTracker::start(&state, waveform, geometry, t)?);
        }
        let h = dt.min(t_end - t);
        for i in 0..2 {
            for k in 0..2 {
                state.positions[i][k] += h * (state.velocities[i][k] + 0.5 * h * acc[i][k]);
            }
        }
        t = if h < dt { t_end } else { t + h };
        let (eps, alpha) = waveform.quadrupole(t);
        let next = accelerations(&state, eps, alpha, geometry, t)?;
        for i in 0..2 {
            for k in 0..2 {
                state.velocities[i][k] += 0.5 * h * (acc[i][k] + next[i][k]);
            }
        }
        acc = next;
        state.time = t;
        step += 1;

        if !state.is_finite() {
            return Err(RotorError::Integrator { time: t, reason: "state became non-finite".into() });
        }
        if let Some(tracker) = free.as_mut() {
            tracker.update(&state, waveform, geometry, t)?;
            if tracker.max_energy_drift > MAX_FREE_ENERGY_DRIFT {
                return Err(RotorError::Integrator {
                    time: t,
                    reason: format!("energy drift {:.3e} in field-free segment", tracker.max_energy_drift),
                });
            }
        }
        if options.sample_every > 0 && step.is_multiple_of(options.sample_every) {
            samples.push(state);
        }
    }
    if options.sample_every > 0 && samples.last().map(|s| s.time) != Some(state.time) {
        samples.push(state);
    }

    Ok(Trajectory {
        samples,
        final_state: state,
        free_segment: free.map(|f| f.finish(&state, m)),
    })
}

struct FreeTracker {
    start_time: f64,
    energy0: f64,
    angular_momentum0: f64,
    max_energy_drift: f64,
    last_axis: [f64; 2],
    unwrapped: f64,
    last_time: f64,
}

impl FreeTracker {
    fn start(state: &ClassicalState, w: &SpinUpWaveform, g: &RotorGeometry, t: f64) -> Result<Self> {
        Ok(Self {
            start_time: t,
            energy0: state.kinetic_energy(g.ion_mass) + potential_energy(state, w, t, g)?,
            angular_momentum0: state.rotor_angular_momentum(g.ion_mass),
            max_energy_drift: 0.0,
            last_axis: state.relative(),
            unwrapped: 0.0,
            last_time: t,
        })
    }

    fn update(&mut self, state: &ClassicalState, w: &SpinUpWaveform, g: &RotorGeometry, t: f64) -> Result<()> {
        let e = state.kinetic_energy(g.ion_mass) + potential_energy(state, w, t, g)?;
        let drift = ((e - self.energy0) / self.energy0).abs();
        self.max_energy_drift = self.max_energy_drift.max(drift);
        let axis = state.relative();
        let cross = self.last_axis[0] * axis[1] - self.last_axis[1] * axis[0];
        let dot = self.last_axis[0] * axis[0] + self.last_axis[1] * axis[1];
        self.unwrapped += cross.atan2(dot);
        self.last_axis = axis;
        self.last_time = t;
        Ok(())
    }

    fn finish(self, state: &ClassicalState, ion_mass: f64) -> FreeSegment {
        let duration = self.last_time - self.start_time;
        let l_end = state.rotor_angular_momentum(ion_mass);
        let l_drift = if self.angular_momentum0 != 0.0 {
            ((l_end - self.angular_momentum0) / self.angular_momentum0).abs()
        } else {
            (l_end - self.angular_momentum0).abs()
        };
        FreeSegment {
            start_time: self.start_time,
            duration,
            max_energy_drift: self.max_energy_drift,
            angular_momentum_drift: l_drift,
            mean_rotation_rate: if duration > 0.0 { self.unwrapped / duration } else { state.rotation_rate() },
        }
    }
}
