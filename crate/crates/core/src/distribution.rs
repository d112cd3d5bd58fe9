use serde::{Deserialize, Serialize};

use crate::error::{Result, RotorError};

/// Default truncation of the Gaussian, in standard deviations.
pub const DEFAULT_N_CUT: f64 = 6.0;

/// Discretized Gaussian population over integer angular-momentum quanta,
/// `p(ℓ) ∝ exp(−(ℓ − l0)² / 2σ_ℓ²)`, truncated at `|ℓ − l0| ≲ n_cut·σ_ℓ`
/// and renormalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularDistribution {
    l0: f64,
    sigma_l: f64,
    /// First ℓ on the grid; weights[i] belongs to `l_min + i`.
    l_min: i64,
    weights: Vec<f64>,
}

impl AngularDistribution {
    pub fn gaussian(l0: f64, sigma_l: f64) -> Result<Self> {
        Self::gaussian_truncated(l0, sigma_l, DEFAULT_N_CUT)
    }

    pub fn gaussian_truncated(l0: f64, sigma_l: f64, n_cut: f64) -> Result<Self> {
        if !l0.is_finite() {
            return Err(RotorError::domain(format!("l0 must be finite, got {l0}")));
        }
        if !(sigma_l >= 0.0) || !sigma_l.is_finite() {
            return Err(RotorError::domain(format!("sigma_l must be >= 0, got {sigma_l}")));
        }
        if !(n_cut > 0.0) {
            return Err(RotorError::domain(format!("n_cut must be > 0, got {n_cut}")));
        }
        if sigma_l == 0.0 {
            return Ok(Self {
                l0,
                sigma_l,
                l_min: l0.round() as i64,
                weights: vec![1.0],
            });
        }
        let lo = (l0 - n_cut * sigma_l).round() as i64;
        let hi = (l0 + n_cut * sigma_l).round() as i64;
        let inv_two_var = 1.0 / (2.0 * sigma_l * sigma_l);
        let raw: Vec<f64> = (lo..=hi)
            .map(|l| {
                let d = l as f64 - l0;
                (-d * d * inv_two_var).exp()
            })
            .collect();
        Self::from_weights(l0, sigma_l, lo, raw)
    }

    /// Arbitrary non-negative weights starting at `l_min`; renormalized.
    /// `l0` and `sigma_l` are carried as the nominal center and width.
    pub fn from_weights(l0: f64, sigma_l: f64, l_min: i64, weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(RotorError::domain("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(RotorError::EmptyData("distribution has no weight".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { l0, sigma_l, l_min, weights })
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn sigma_l(&self) -> f64 {
        self.sigma_l
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn l_range(&self) -> std::ops::RangeInclusive<i64> {
        self.l_min..=self.l_min + self.weights.len() as i64 - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(ℓ, p)` pairs in increasing ℓ.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.l_min + i as i64, p))
    }

    /// Mean of the discrete distribution.
    pub fn mean(&self) -> f64 {
        self.iter().map(|(l, p)| l as f64 * p).sum()
    }

    /// Standard deviation of the discrete distribution.
    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        self.iter()
            .map(|(l, p)| (l as f64 - mean).powi(2) * p)
            .sum::<f64>()
            .sqrt()
    }
}
