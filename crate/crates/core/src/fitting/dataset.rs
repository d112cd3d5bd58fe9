use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RotorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    /// x: laser detuning from the carrier, rad/s.
    Spectrum,
    /// x: drive time, s.
    Rabi,
    /// x: Ramsey wait time, s.
    Ramsey,
}

/// Measured (or synthetic) excitation probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y_err: Option<Vec<f64>>,
    pub shots: Option<Vec<u32>>,
}

impl Dataset {
    pub fn new(kind: DatasetKind, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let d = Self { kind, x, y, y_err: None, shots: None };
        d.validate()?;
        Ok(d)
    }

    pub fn with_errors(mut self, y_err: Vec<f64>) -> Result<Self> {
        self.y_err = Some(y_err);
        self.validate()?;
        Ok(self)
    }

    pub fn with_shots(mut self, shots: Vec<u32>) -> Result<Self> {
        self.shots = Some(shots);
        self.validate()?;
        Ok(self)
    }

    /// Synthetic measurement of probabilities `p`: each point is k/N with
    /// k ~ Binomial(N = `shots`, p). Deterministic for a given seed.
    pub fn simulate(kind: DatasetKind, x: Vec<f64>, p: &[f64], shots: u32, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(RotorError::FitSetup("shot count must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = p
            .iter()
            .map(|&pi| {
                let dist = Binomial::new(u64::from(shots), pi.clamp(0.0, 1.0))
                    .map_err(|e| RotorError::domain(format!("binomial sampling: {e}")))?;
                Ok(dist.sample(&mut rng) as f64 / f64::from(shots))
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::new(kind, x, y)?.with_shots(vec![shots; p.len()])
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.len();
        if n == 0 {
            return Err(RotorError::EmptyData("dataset has no points".into()));
        }
        if self.y.len() != n {
            return Err(RotorError::FitSetup(format!("x has {n} points but y has {}", self.y.len())));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(RotorError::FitSetup("x contains non-finite values".into()));
        }
        if let Some(bad) = self.y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(RotorError::FitSetup(format!("excitation {bad} outside [0, 1]")));
        }
        if let Some(err) = &self.y_err {
            if err.len() != n {
                return Err(RotorError::FitSetup("y_err length mismatch".into()));
            }
            if err.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
                return Err(RotorError::FitSetup("y_err must be positive".into()));
            }
        }
        if let Some(shots) = &self.shots {
            if shots.len() != n {
                return Err(RotorError::FitSetup("shots length mismatch".into()));
            }
            if shots.contains(&0) {
                return Err(RotorError::FitSetup("shot counts must be positive".into()));
            }
        }
        Ok(())
    }

    /// Per-point standard errors: explicit `y_err`, else the floored
    /// binomial estimate sqrt(max(y(1−y), 1/(4N))/N) from shot counts, else
    /// `None` (unit weights).
    pub fn effective_errors(&self) -> Option<Vec<f64>> {
        if let Some(err) = &self.y_err {
            return Some(err.clone());
        }
        self.shots.as_ref().map(|shots| {
            self.y
                .iter()
                .zip(shots)
                .map(|(&y, &n)| binomial_error(y, n))
                .collect()
        })
    }
}

pub(crate) fn binomial_error(y: f64, shots: u32) -> f64 {
    let n = f64::from(shots);
    ((y * (1.0 - y)).max(1.0 / (4.0 * n)) / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_errors_with_floor() {
        let d = Dataset::new(DatasetKind::Rabi, vec![0.0, 1.0, 2.0], vec![0.5, 0.0, 1.0])
            .unwrap()
            .with_shots(vec![100, 100, 400])
            .unwrap();
        let e = d.effective_errors().unwrap();
        assert!((e[0] - 0.05).abs() < 1e-15);
        assert!((e[1] - (1.0f64 / 400.0 / 100.0).sqrt()).abs() < 1e-15);
        assert!((e[2] - (1.0f64 / 1600.0 / 400.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn explicit_errors_win() {
        let d = Dataset::new(DatasetKind::Rabi, vec![0.0], vec![0.5])
            .unwrap()
            .with_shots(vec![100])
            .unwrap()
            .with_errors(vec![0.2])
            .unwrap();
        assert_eq!(d.effective_errors(), Some(vec![0.2]));
    }

    #[test]
    fn simulated_counts_are_reproducible() {
        let p = vec![0.0, 0.25, 0.5, 1.0];
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let a = Dataset::simulate(DatasetKind::Rabi, x.clone(), &p, 200, 7).unwrap();
        let b = Dataset::simulate(DatasetKind::Rabi, x, &p, 200, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.y[0], 0.0);
        assert_eq!(a.y[3], 1.0);
        assert!(a.y.iter().all(|v| (v * 200.0).fract() == 0.0));
    }

    #[test]
    fn validation() {
        assert!(Dataset::new(DatasetKind::Rabi, vec![], vec![]).is_err());
        assert!(Dataset::new(DatasetKind::Rabi, vec![0.0], vec![0.5, 0.2]).is_err());
        assert!(Dataset::new(DatasetKind::Rabi, vec![0.0], vec![1.2]).is_err());
        let ok = Dataset::new(DatasetKind::Rabi, vec![0.0], vec![0.3]).unwrap();
        assert!(ok.clone().with_errors(vec![0.0]).is_err());
        assert!(ok.clone().with_shots(vec![0]).is_err());
        assert!(ok.effective_errors().is_none());
    }
}
