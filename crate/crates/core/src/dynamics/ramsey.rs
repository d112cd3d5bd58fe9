use std::f64::consts::PI;

use nalgebra::{Complex, Matrix2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RotorError};
use crate::{AngularDistribution, RotorGeometry};

type C64 = Complex<f64>;

/// Ramsey sequence on one sideband order: π/2 pulse, free wait, π/2 pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseyConfig {
    pub delta_l: i64,
    /// Duration of each π/2 pulse, s. Ignored when `ideal_pulses` is set.
    pub pulse_duration: f64,
    /// Rabi frequency during the pulses, rad/s.
    pub omega_rabi: f64,
    /// Laser detuning Δ from the group center, rad/s.
    pub overall_detuning: f64,
    /// Free-evolution times between the pulses, s.
    pub wait_grid: Vec<f64>,
    /// Instantaneous, perfect π/2 pulses.
    pub ideal_pulses: bool,
}

impl RamseyConfig {
    pub fn ideal(delta_l: i64, overall_detuning: f64, wait_grid: Vec<f64>) -> Self {
        Self {
            delta_l,
            pulse_duration: 0.0,
            omega_rabi: 0.0,
            overall_detuning,
            wait_grid,
            ideal_pulses: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ideal_pulses {
            return Ok(());
        }
        if !(self.pulse_duration >= 0.0) {
            return Err(RotorError::domain(format!(
                "pulse duration must be >= 0, got {}",
                self.pulse_duration
            )));
        }
        if !self.omega_rabi.is_finite() {
            return Err(RotorError::domain("Rabi frequency must be finite"));
        }
        Ok(())
    }
}

/// Square pulse propagator in the rotating frame,
/// H = (Ω/2)σ_x − (δ/2)σ_z, basis (S, D).
fn pulse_propagator(omega: f64, delta: f64, duration: f64) -> Matrix2<C64> {
    let generalized = (omega * omega + delta * delta).sqrt();
    if generalized == 0.0 {
        return Matrix2::identity();
    }
    let a = 0.5 * generalized * duration;
    let (s, c) = a.sin_cos();
    let nx = omega / generalized;
    let nz = -delta / generalized;
    let i = C64::i();
    // cos(a)·1 − i·sin(a)·(nx σx + nz σz)
    Matrix2::new(
        C64::new(c, 0.0) - i * s * nz,
        -i * s * nx,
        -i * s * nx,
        C64::new(c, 0.0) + i * s * nz,
    )
}

/// Excitation probability of a single manifold with total detuning `delta`
/// after π/2 – wait – π/2 with finite square pulses.
pub fn ramsey_manifold_probability(omega: f64, delta: f64, pulse: f64, wait: f64) -> f64 {
    let p = pulse_propagator(omega, delta, pulse);
    ramsey_with_pulse(&p, delta, wait)
}

fn ramsey_with_pulse(pulse: &Matrix2<C64>, delta: f64, wait: f64) -> f64 {
    // Free evolution exp(+i δ t σz / 2).
    let phase = C64::from_polar(1.0, 0.5 * delta * wait);
    // Only the D amplitude from an initial S is needed:
    // (U_p F U_p)[1,0] = U_p[1,0]·F[0]·U_p[0,0] + U_p[1,1]·F[1]·U_p[1,0]
    let amp = pulse[(1, 0)] * phase * pulse[(0, 0)] + pulse[(1, 1)] * phase.conj() * pulse[(1, 0)];
    amp.norm_sqr()
}

/// Ramsey fringe P(D)(t) summed over the manifolds of `dist`.
///
/// With ideal pulses this is ½(1 + Σ_ℓ p_ℓ cos((δ_ℓ + Δ) t)).
pub fn ramsey_trace(
    geometry: &RotorGeometry,
    dist: &AngularDistribution,
    config: &RamseyConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if dist.is_empty() {
        return Err(RotorError::EmptyData("angular distribution is empty".into()));
    }
    let detunings: Vec<(f64, f64)> = dist
        .iter()
        .map(|(l, p)| {
            let d = geometry.transition_detuning(l, dist.l0(), config.delta_l);
            (p, d + config.overall_detuning)
        })
        .collect();

    let values: Vec<f64> = if config.ideal_pulses {
        config
            .wait_grid
            .par_iter()
            .map(|&t| {
                let coherence: f64 = detunings.iter().map(|&(p, d)| p * (d * t).cos()).sum();
                0.5 * (1.0 + coherence)
            })
            .collect()
    } else {
        let pulses: Vec<(f64, f64, Matrix2<C64>)> = detunings
            .iter()
            .map(|&(p, d)| (p, d, pulse_propagator(config.omega_rabi, d, config.pulse_duration)))
            .collect();
        config
            .wait_grid
            .par_iter()
            .map(|&t| {
                pulses
                    .iter()
                    .map(|(p, d, u)| p * ramsey_with_pulse(u, *d, t))
                    .sum()
            })
            .collect()
    };
    Ok(values.into_iter().map(|v: f64| v.clamp(0.0, 1.0)).collect())
}

/// Fringe contrast |Σ_ℓ p_ℓ exp(i δ_ℓ t)| of the ideal-pulse Ramsey signal
/// for the discrete distribution.
pub fn ramsey_contrast(geometry: &RotorGeometry, dist: &AngularDistribution, delta_l: i64, t: f64) -> f64 {
    let (re, im) = dist.iter().fold((0.0, 0.0), |(re, im), (l, p)| {
        let (s, c) = (geometry.transition_detuning(l, dist.l0(), delta_l) * t).sin_cos();
        (re + p * c, im + p * s)
    });
    re.hypot(im)
}

/// Continuum Gaussian envelope exp(−s²t²/2), s = 2ω_r σ_ℓ |Δℓ|.
pub fn contrast_envelope(geometry: &RotorGeometry, sigma_l: f64, delta_l: i64, t: f64) -> Result<f64> {
    if !(sigma_l >= 0.0) {
        return Err(RotorError::domain(format!("sigma_l must be >= 0, got {sigma_l}")));
    }
    let s = 2.0 * geometry.omega_r * sigma_l * (delta_l as f64).abs();
    Ok((-0.5 * s * s * t * t).exp())
}

/// Wait time π/(ω_r |Δℓ|) at which every manifold phase is a multiple of 2π.
pub fn revival_time(geometry: &RotorGeometry, delta_l: i64) -> Result<f64> {
    if delta_l == 0 {
        return Err(RotorError::domain("revival time undefined for the carrier (Δℓ = 0)"));
    }
    Ok(PI / (geometry.omega_r * (delta_l as f64).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> RotorGeometry {
        RotorGeometry::calcium_reference()
    }

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn zero_wait_is_a_pi_pulse() {
        let g = geom();
        let dist = AngularDistribution::gaussian(7775.0, 42.7).unwrap();
        let p = ramsey_trace(&g, &dist, &RamseyConfig::ideal(1, 0.0, vec![0.0])).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn finite_pulse_single_manifold_resonant() {
        // Two resonant π/2 pulses form a π pulse regardless of the wait.
        let omega = 2.0 * PI * 10e3;
        let tau = PI / (2.0 * omega);
        for &t in &[0.0, 1e-4, 3.3e-3] {
            assert!((ramsey_manifold_probability(omega, 0.0, tau, t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_pulse_zero_duration_reduces_to_identity() {
        assert!(ramsey_manifold_probability(1e4, 300.0, 0.0, 1e-3).abs() < 1e-15);
    }

    #[test]
    fn propagator_is_unitary() {
        let u = pulse_propagator(3.0e4, -1.7e4, 2.3e-5);
        let prod = u.adjoint() * u;
        assert!((prod - Matrix2::identity()).norm() < 1e-13);
    }

    #[test]
    fn unitarity_of_single_manifold_against_brute_force() {
        // Oracle: integrate the Schrödinger equation for the same sequence with
        // small RK4 steps.
        let (omega, delta, tau, wait) = (2.0 * PI * 5e3, 2.0 * PI * 1.2e3, 40e-6, 150e-6);
        let rhs = |psi: [C64; 2], w: f64| {
            let i = C64::i();
            [
                -i * (-0.5 * delta * psi[0] + 0.5 * w * psi[1]),
                -i * (0.5 * w * psi[0] + 0.5 * delta * psi[1]),
            ]
        };
        let mut psi = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let steps = 20000;
        for (dur, w) in [(tau, omega), (wait, 0.0), (tau, omega)] {
            let h = dur / steps as f64;
            for _ in 0..steps {
                let k1 = rhs(psi, w);
                let k2 = rhs([psi[0] + k1[0] * (h / 2.0), psi[1] + k1[1] * (h / 2.0)], w);
                let k3 = rhs([psi[0] + k2[0] * (h / 2.0), psi[1] + k2[1] * (h / 2.0)], w);
                let k4 = rhs([psi[0] + k3[0] * h, psi[1] + k3[1] * h], w);
                for j in 0..2 {
                    psi[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
                }
            }
        }
        let want = psi[1].norm_sqr();
        let got = ramsey_manifold_probability(omega, delta, tau, wait);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    fn max_pulse_deviation(sigma: f64, det: f64, dl: i64, factor: f64) -> f64 {
        let g = geom();
        let dist = AngularDistribution::gaussian(7775.0, sigma).unwrap();
        let s = 2.0 * g.omega_r * sigma * dl as f64;
        let omega = factor * (s + det.abs());
        let waits = grid(4e-3, 1001);
        let ideal = ramsey_trace(&g, &dist, &RamseyConfig::ideal(dl, det, waits.clone())).unwrap();
        let cfg = RamseyConfig {
            delta_l: dl,
            pulse_duration: PI / (2.0 * omega),
            omega_rabi: omega,
            overall_detuning: det,
            wait_grid: waits,
            ideal_pulses: false,
        };
        let finite = ramsey_trace(&g, &dist, &cfg).unwrap();
        ideal.iter().zip(&finite).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn finite_pulses_converge_to_ideal() {
        for &(sigma, det_hz, dl) in &[(42.7, 0.0, 1), (42.7, 6e3, 1), (42.7, 6e3, 4), (0.0, 6e3, 1)] {
            let det = 2.0 * PI * det_hz;
            let coarse = max_pulse_deviation(sigma, det, dl, 100.0);
            let fine = max_pulse_deviation(sigma, det, dl, 1000.0);
            // First-order error ∝ 1/Ω.
            assert!(fine < 1e-3, "{fine}");
            assert!((coarse / fine - 10.0).abs() < 1.0, "{coarse} / {fine}");
        }
    }

    #[test]
    fn envelope_examples() {
        let g = geom();
        assert_eq!(contrast_envelope(&g, 42.7, 1, 0.0).unwrap(), 1.0);
        // 1/e at √2/s.
        let s = 2.0 * g.omega_r * 42.7;
        let t_e = 2f64.sqrt() / s;
        assert!((t_e - 410e-6).abs() < 5e-6, "{t_e}");
        assert!((contrast_envelope(&g, 42.7, 1, t_e).unwrap() - (-1f64).exp()).abs() < 1e-12);
        let t2 = 2f64.sqrt() / (2.0 * g.omega_r * 42.7 * 2.0);
        let t4 = 2f64.sqrt() / (2.0 * g.omega_r * 42.7 * 4.0);
        assert!((t4 - t2 / 2.0).abs() < 1e-15);
        assert!(contrast_envelope(&g, -1.0, 1, 0.0).is_err());
    }

    #[test]
    fn revival_examples() {
        let g = geom();
        let t1 = revival_time(&g, 1).unwrap();
        assert!((t1 - 77.8e-3).abs() < 0.1e-3, "{t1}");
        assert!((revival_time(&g, 4).unwrap() - t1 / 4.0).abs() < 1e-15);
        assert!((revival_time(&g, -4).unwrap() - t1 / 4.0).abs() < 1e-15);
        assert!(revival_time(&g, 0).is_err());
    }

    #[test]
    fn contrast_recovers_at_revival() {
        let g = geom();
        let dist = AngularDistribution::gaussian(7775.0, 42.7).unwrap();
        let tr = revival_time(&g, 1).unwrap();
        let p = ramsey_trace(&g, &dist, &RamseyConfig::ideal(1, 0.0, vec![tr / 2.0 - 0.02, tr])).unwrap();
        assert!(p[0] < 0.51);
        assert!((p[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn envelope_matches_discrete_contrast_in_continuum_regime() {
        let g = geom();
        for &(sigma, dl) in &[(10.0, 1), (42.7, 1), (42.7, 4), (120.0, 2)] {
            let dist = AngularDistribution::gaussian(7775.3, sigma).unwrap();
            let tr = revival_time(&g, dl).unwrap();
            for t in grid(0.3 * tr, 301) {
                let discrete = ramsey_contrast(&g, &dist, dl, t);
                let cont = contrast_envelope(&g, sigma, dl, t).unwrap();
                assert!((discrete - cont).abs() < 1e-3, "σ={sigma} Δℓ={dl} t={t}");
            }
        }
    }

    #[test]
    fn fringe_frequency_follows_detuning() {
        // With a 6 kHz detuning and no spread, the fringe is cos(2π·6kHz·t).
        let g = geom();
        let dist = AngularDistribution::gaussian(7775.0, 0.0).unwrap();
        let det = 2.0 * PI * 6e3;
        let times = grid(1e-3, 201);
        let p = ramsey_trace(&g, &dist, &RamseyConfig::ideal(1, det, times.clone())).unwrap();
        for (t, v) in times.iter().zip(&p) {
            assert!((v - 0.5 * (1.0 + (det * t).cos())).abs() < 1e-12);
        }
    }
}
