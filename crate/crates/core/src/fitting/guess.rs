//! Deterministic starting values for the fit parameters.

use std::f64::consts::PI;

use super::model::FIT_N_CUT;
use crate::constants::QUBIT_WAVELENGTH;
use crate::drive::theta_for_coupled_order;
use crate::dynamics::rabi_trace;
use crate::error::{Result, RotorError};
use crate::{AngularDistribution, LaserDrive, RotorGeometry};

fn check(x: &[f64], y: &[f64], min_len: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(RotorError::FitSetup("x and y lengths differ".into()));
    }
    if x.len() < min_len {
        return Err(RotorError::EmptyData(format!("need at least {min_len} points for a starting guess")));
    }
    Ok(())
}

/// Points sorted by x.
fn sorted(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    (idx.iter().map(|&i| x[i]).collect(), idx.iter().map(|&i| y[i]).collect())
}

fn moving_average(y: &[f64], half: usize) -> Vec<f64> {
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(y.len());
            y[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Ω and σ_ℓ for a sideband Rabi trace.
///
/// Ω starts at π / t_peak from the first prominent maximum. Ω and σ_ℓ are
/// then refined by alternating grid scans of the squared error: Ω within
/// ±30% (then ±5%), σ_ℓ on a log grid over [1, 1000].
pub fn rabi_guess(geometry: &RotorGeometry, delta_l: i64, l0: f64, times: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    check(times, y, 8)?;
    let (t, y) = sorted(times, y);
    let s = moving_average(&y, 2);
    let top = s.iter().cloned().fold(f64::MIN, f64::max);
    let peak = (1..s.len() - 1)
        .find(|&i| s[i] >= s[i - 1] && s[i] > s[i + 1] && s[i] > 0.5 * top)
        .unwrap_or_else(|| s.iter().enumerate().fold(0, |b, (i, v)| if *v > s[b] { i } else { b }));
    if !(t[peak] > 0.0) {
        return Err(RotorError::FitSetup("no Rabi peak at positive time".into()));
    }
    let omega = PI / t[peak];

    // The peak time is biased once the ensemble dephases, so refine Ω and
    // σ_ℓ by alternating one-dimensional scans of the squared error.
    let sse = |omega: f64, sigma: f64| -> Result<f64> {
        let dist = AngularDistribution::gaussian_truncated(l0, sigma, FIT_N_CUT)?;
        let drive = LaserDrive::new(QUBIT_WAVELENGTH, 0.0, omega, delta_l)?;
        let model = rabi_trace(geometry, &dist, &drive, &t)?;
        Ok(model.iter().zip(&y).map(|(m, v)| (m - v).powi(2)).sum())
    };
    let argmin = |values: Vec<f64>, cost: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        let mut best = (f64::INFINITY, values[0]);
        for v in values {
            let c = cost(v)?;
            if c < best.0 {
                best = (c, v);
            }
        }
        Ok(best.1)
    };
    let scale_grid = |center: f64, half: f64, n: usize| -> Vec<f64> {
        (0..n).map(|k| center * (1.0 - half + 2.0 * half * k as f64 / (n - 1) as f64)).collect()
    };
    let sigma_grid: Vec<f64> = (0..RABI_SIGMA_GRID.2)
        .map(|k| {
            let frac = k as f64 / (RABI_SIGMA_GRID.2 - 1) as f64;
            RABI_SIGMA_GRID.0 * (RABI_SIGMA_GRID.1 / RABI_SIGMA_GRID.0).powf(frac)
        })
        .collect();
    let mut sigma = 10.0;
    let mut omega = omega;
    for (half, n) in [(0.3, 25), (0.05, 21)] {
        omega = argmin(scale_grid(omega, half, n), &|w| sse(w, sigma))?;
        sigma = argmin(sigma_grid.clone(), &|s| sse(omega, s))?;
    }
    Ok((omega, sigma))
}

/// (lowest, highest, count) of the σ_ℓ scan in [`rabi_guess`].
const RABI_SIGMA_GRID: (f64, f64, usize) = (1.0, 1000.0, 31);

/// Angular frequency (rad/s) maximizing |Σ (y − ȳ) e^{−iωt}|, scanned up to
/// the Nyquist limit of the median sample spacing with 8× oversampling.
pub fn dominant_frequency(times: &[f64], y: &[f64]) -> Result<f64> {
    check(times, y, 4)?;
    let (t, y) = sorted(times, y);
    let mut gaps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).filter(|g| *g > 0.0).collect();
    if gaps.is_empty() {
        return Err(RotorError::FitSetup("all sample times coincide".into()));
    }
    gaps.sort_by(f64::total_cmp);
    let dt = gaps[gaps.len() / 2];
    let span = t[t.len() - 1] - t[0];
    let nyquist = PI / dt;
    let step = 2.0 * PI / (8.0 * span);
    let ybar = mean(&y);
    let power = |w: f64| {
        let (re, im) = t.iter().zip(&y).fold((0.0, 0.0), |(re, im), (ti, yi)| {
            let (s, c) = (w * ti).sin_cos();
            (re + (yi - ybar) * c, im - (yi - ybar) * s)
        });
        re * re + im * im
    };
    let n = (nyquist / step).ceil() as usize;
    let (mut best_w, mut best_p) = (0.0, power(0.0));
    for k in 1..=n {
        let w = k as f64 * step;
        let p = power(w);
        if p > best_p {
            best_w = w;
            best_p = p;
        }
    }
    // Parabolic refinement on the scan neighbours.
    if best_w > 0.0 {
        let (pm, pp) = (power(best_w - step), power(best_w + step));
        let denom = pm - 2.0 * best_p + pp;
        if denom < 0.0 {
            best_w += 0.5 * step * (pm - pp) / denom;
        }
    }
    Ok(best_w)
}

/// |Δ| and σ_ℓ for an ideal-pulse Ramsey trace.
///
/// Δ is the dominant fringe frequency. σ_ℓ comes from the envelope decay
/// rate s of exp(−s²t²/2), s = 2ω_r σ_ℓ |Δℓ|, estimated by a straight-line
/// fit of the log contrast against t². If the record shows no decay, the
/// 1/e time is taken to be the record length.
pub fn ramsey_guess(geometry: &RotorGeometry, delta_l: i64, times: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if delta_l == 0 {
        return Err(RotorError::domain("carrier Ramsey fringes carry no σ_ℓ information"));
    }
    let detuning = dominant_frequency(times, y)?;
    let (t, y) = sorted(times, y);
    // Ideal pulses give ½(1 + C(t)cos Δt) with no phase offset, so away
    // from the fringe nodes C = (2P − 1)/cos Δt. Fit ln C = a − s²t²/2.
    let points: Vec<(f64, f64)> = t
        .iter()
        .zip(&y)
        .filter_map(|(&ti, &yi)| {
            let c = (detuning * ti).cos();
            let contrast = (2.0 * yi - 1.0) / c;
            (c.abs() > 0.5 && contrast > 0.05).then(|| (ti * ti, contrast.min(1.0).ln()))
        })
        .collect();
    let span = t[t.len() - 1] - t[0];
    let fallback = 2f64.sqrt() / span.max(f64::MIN_POSITIVE);
    let s = if points.len() >= 3 {
        let n = points.len() as f64;
        let (mu, mv) = (points.iter().map(|p| p.0).sum::<f64>() / n, points.iter().map(|p| p.1).sum::<f64>() / n);
        let cov: f64 = points.iter().map(|(u, v)| (u - mu) * (v - mv)).sum();
        let var: f64 = points.iter().map(|(u, _)| (u - mu).powi(2)).sum();
        let slope = if var > 0.0 { cov / var } else { 0.0 };
        if slope < 0.0 {
            (-2.0 * slope).sqrt()
        } else {
            fallback
        }
    } else {
        fallback
    };
    // 1/e time t_e = √2/s.
    Ok((detuning, s / (2.0 * geometry.omega_r * delta_l.unsigned_abs() as f64)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumGuess {
    pub theta: f64,
    pub f_rot: f64,
    /// Carrier Rabi frequency, rad/s.
    pub omega: f64,
    pub highest_visible_order: i64,
}

/// θ, f_rot and carrier Ω for a sideband spectrum over detunings (rad/s).
///
/// f_rot comes from the autocorrelation of the spectrum: the first lag past
/// its zero crossing that comes within 70% of the strongest. An order counts as visible when its peak
/// reaches `visibility` times the carrier peak; θ puts k_x·r_e at the
/// highest visible order. Ω inverts the carrier height sin²(Ωt/2).
pub fn spectrum_guess(
    geometry: &RotorGeometry,
    wavelength: f64,
    probe_time: f64,
    detunings: &[f64],
    y: &[f64],
    visibility: f64,
) -> Result<SpectrumGuess> {
    check(detunings, y, 16)?;
    let (x, y) = sorted(detunings, y);
    let lo = x[0];
    let span = x[x.len() - 1] - lo;
    let mut gaps: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).filter(|g| *g > 0.0).collect();
    gaps.sort_by(f64::total_cmp);
    let step = gaps[gaps.len() / 2];
    let n = (span / step).round() as usize + 1;
    // Resample on a uniform grid by linear interpolation.
    let uniform: Vec<f64> = (0..n)
        .map(|i| {
            let xi = lo + i as f64 * step;
            let k = x.partition_point(|v| *v <= xi).clamp(1, x.len() - 1);
            let (x0, x1) = (x[k - 1], x[k]);
            if x1 == x0 {
                y[k]
            } else {
                y[k - 1] + (y[k] - y[k - 1]) * (xi - x0) / (x1 - x0)
            }
        })
        .collect();
    let ybar = mean(&uniform);
    let centred: Vec<f64> = uniform.iter().map(|v| v - ybar).collect();
    let ac: Vec<f64> = (0..n / 2)
        .map(|lag| centred.iter().zip(&centred[lag..]).map(|(a, b)| a * b).sum())
        .collect();
    let zero = ac
        .iter()
        .position(|v| *v <= 0.0)
        .ok_or_else(|| RotorError::FitSetup("spectrum autocorrelation never decays; no sidebands?".into()))?;
    // Multiples of the spacing correlate almost as well as the spacing
    // itself, so take the first local maximum close to the strongest.
    let strongest = ac[zero..].iter().cloned().fold(f64::MIN, f64::max);
    let best = (zero.max(1)..ac.len().saturating_sub(1))
        .find(|&i| ac[i] >= ac[i - 1] && ac[i] >= ac[i + 1] && ac[i] >= 0.7 * strongest)
        .ok_or_else(|| RotorError::FitSetup("scan too short to see a sideband spacing".into()))?;
    let mut lag = best as f64;
    if best > zero && best + 1 < ac.len() {
        let denom = ac[best - 1] - 2.0 * ac[best] + ac[best + 1];
        if denom < 0.0 {
            lag += 0.5 * (ac[best - 1] - ac[best + 1]) / denom;
        }
    }
    let spacing = lag * step;
    let f_rot = spacing / (2.0 * PI);

    let peak_near = |center: f64| {
        x.iter()
            .zip(&y)
            .filter(|(xi, _)| (**xi - center).abs() <= 0.25 * spacing)
            .map(|(_, v)| *v)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    let carrier = peak_near(0.0).ok_or_else(|| RotorError::FitSetup("scan does not cover the carrier".into()))?;
    let mut highest = 0;
    loop {
        let order = highest + 1;
        let h = [peak_near(order as f64 * spacing), peak_near(-(order as f64) * spacing)]
            .into_iter()
            .flatten()
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        match h {
            Some(h) if h >= visibility * carrier => highest = order,
            _ => break,
        }
    }
    let theta = theta_for_coupled_order(highest as f64, wavelength, geometry.r_e);
    let omega = 2.0 * carrier.clamp(0.0, 1.0).sqrt().asin() / probe_time;
    Ok(SpectrumGuess { theta, f_rot, omega, highest_visible_order: highest })
}
