//! Bounded Levenberg-Marquardt with Marquardt diagonal scaling and a
//! forward-difference Jacobian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RotorError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Jacobian step as a fraction of |x| (or of 10⁻⁶ of the bound range
    /// near 0).
    pub relative_step: f64,
    /// Threshold on the relative χ² decrease and the relative step norm.
    pub tolerance: f64,
    /// Consecutive small accepted steps required to declare convergence.
    pub patience: usize,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_step: 1e-6,
            tolerance: 1e-10,
            patience: 3,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Weighting pass; χ² is only comparable within one pass.
    pub pass: usize,
    pub iteration: usize,
    pub chi2: f64,
    pub lambda: f64,
    pub accepted: bool,
}

/// A trial step that left the box and was pulled back onto a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEvent {
    pub iteration: usize,
    pub index: usize,
    pub attempted: f64,
    pub clamped: f64,
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
    pub chi2: f64,
    pub n_iterations: usize,
    pub converged: bool,
    pub diagnostic: Option<String>,
    /// JᵀJ at `x` (weighted residuals), for the covariance.
    pub normal_matrix: DMatrix<f64>,
    pub log: Vec<StepRecord>,
    pub bound_events: Vec<BoundEvent>,
}

fn chi2(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Finite-difference steps: `relative_step·max(|x|, 1e-6·range)`, with
/// range = upper − lower when finite and 1 otherwise.
pub fn jacobian_steps(x: &[f64], lower: &[f64], upper: &[f64], relative_step: f64) -> Vec<f64> {
    x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&lo, &hi))| {
            let range = if (hi - lo).is_finite() { hi - lo } else { 1.0 };
            relative_step * v.abs().max(1e-6 * range)
        })
        .collect()
}

/// Forward-difference Jacobian of `f` at `x` (with `f(x)` = `r0`). A step
/// that would cross the upper bound, or that the model rejects, is taken
/// backwards instead.
pub fn forward_jacobian<F>(f: &F, x: &[f64], r0: &[f64], steps: &[f64], upper: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut jac = DMatrix::zeros(r0.len(), x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        let mut h = steps[j];
        if x[j] + h > upper[j] {
            h = -h;
        }
        probe[j] = x[j] + h;
        let r = match f(&probe) {
            Ok(r) => r,
            Err(_) => {
                h = -h;
                probe[j] = x[j] + h;
                f(&probe)?
            }
        };
        probe[j] = x[j];
        for (i, (a, b)) in r.iter().zip(r0).enumerate() {
            jac[(i, j)] = (a - b) / h;
        }
    }
    Ok(jac)
}

/// Central-difference Jacobian, for checking [`forward_jacobian`].
pub fn central_jacobian<F>(f: &F, x: &[f64], steps: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut cols = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        probe[j] = x[j] + steps[j];
        let plus = f(&probe)?;
        probe[j] = x[j] - steps[j];
        let minus = f(&probe)?;
        probe[j] = x[j];
        cols.push(DVector::from_iterator(
            plus.len(),
            plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * steps[j])),
        ));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Minimize Σ r_i(x)² within the box [lower, upper].
///
/// A model error at a trial point rejects that step. Convergence requires
/// `patience` consecutive accepted steps with relative χ² decrease or
/// relative step norm below `tolerance`, or a zero residual, or a damping
/// parameter so large that no descent remains.
pub fn minimize<F>(f: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: &LmOptions) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    if lower.len() != n || upper.len() != n {
        return Err(RotorError::FitSetup("bounds do not match parameter count".into()));
    }
    let mut bound_events = Vec::new();
    let mut x: Vec<f64> = x0
        .iter()
        .enumerate()
        .map(|(j, &v)| clamp_logged(v, j, lower[j], upper[j], 0, &mut bound_events))
        .collect();
    let mut r = f(&x)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(RotorError::FitSetup("residuals are not finite at the initial point".into()));
    }
    let mut chi = chi2(&r);
    let mut lambda = opts.initial_lambda;
    let mut log = Vec::new();
    let mut small_steps = 0;
    let mut converged = chi == 0.0;
    let mut diagnostic = None;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let steps = jacobian_steps(&x, lower, upper, opts.relative_step);
        let jac = forward_jacobian(&f, &x, &r, &steps, upper)?;
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let diag_floor = a.diagonal().max() * 1e-15;

        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for j in 0..n {
                damped[(j, j)] += lambda * a[(j, j)].max(diag_floor).max(f64::MIN_POSITIVE);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let trial: Vec<f64> = (0..n)
                .map(|j| clamp_logged(x[j] + delta[j], j, lower[j], upper[j], iterations, &mut bound_events))
                .collect();
            let trial_r = match f(&trial) {
                Ok(tr) if tr.iter().all(|v| v.is_finite()) => tr,
                _ => {
                    log.push(StepRecord { pass: 0, iteration: iterations, chi2: f64::INFINITY, lambda, accepted: false });
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial_chi = chi2(&trial_r);
            log.push(StepRecord { pass: 0, iteration: iterations, chi2: trial_chi, lambda, accepted: trial_chi <= chi });
            if trial_chi <= chi {
                let decrease = if chi > 0.0 { (chi - trial_chi) / chi } else { 0.0 };
                let step_norm = (0..n)
                    .map(|j| ((trial[j] - x[j]) / (x[j].abs() + steps[j])).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if decrease < opts.tolerance || step_norm < opts.tolerance {
                    small_steps += 1;
                } else {
                    small_steps = 0;
                }
                x = trial;
                r = trial_r;
                chi = trial_chi;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // Even vanishing steepest-descent steps fail to lower χ².
            converged = true;
            break;
        }
        if chi == 0.0 || small_steps >= opts.patience {
            converged = true;
        }
    }
    if !converged {
        diagnostic = Some(format!("no convergence within {} iterations", opts.max_iterations));
    }

    let steps = jacobian_steps(&x, lower, upper, opts.relative_step);
    let jac = forward_jacobian(&f, &x, &r, &steps, upper)?;
    let normal_matrix = jac.transpose() * &jac;
    Ok(LmOutcome {
        x,
        residuals: r,
        chi2: chi,
        n_iterations: iterations,
        converged,
        diagnostic,
        normal_matrix,
        log,
        bound_events,
    })
}

fn clamp_logged(v: f64, index: usize, lo: f64, hi: f64, iteration: usize, events: &mut Vec<BoundEvent>) -> f64 {
    let c = v.clamp(lo, hi);
    if c != v {
        log::debug!("parameter {index} clamped from {v} to {c} (iteration {iteration})");
        events.push(BoundEvent { iteration, index, attempted: v, clamped: c });
    }
    c
}

/// Inverse of a symmetric normal matrix, or a reason it is singular.
///
/// Singularity is judged on the correlation-scaled matrix so parameters
/// of very different magnitudes do not trigger it.
pub fn invert_normal_matrix(a: &DMatrix<f64>, names: &[String]) -> std::result::Result<DMatrix<f64>, String> {
    let n = a.nrows();
    if let Some(j) = (0..n).find(|&j| !(a[(j, j)] > 0.0)) {
        return Err(format!("normal matrix singular: {} does not affect the residuals", names[j]));
    }
    let d: Vec<f64> = (0..n).map(|j| 1.0 / a[(j, j)].sqrt()).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * d[i] * d[j]);
    let eig = scaled.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if !(min > 1e-13 * eig.eigenvalues.max()) {
        let k = eig.eigenvalues.imin();
        let v = eig.eigenvectors.column(k);
        let involved: Vec<&str> = (0..n)
            .filter(|&j| v[j].abs() > 0.1)
            .map(|j| names[j].as_str())
            .collect();
        return Err(format!(
            "normal matrix singular (condition > 1e13): degenerate combination of {}",
            involved.join(", ")
        ));
    }
    let inv = scaled
        .cholesky()
        .ok_or_else(|| "normal matrix not positive definite".to_string())?
        .inverse();
    let cov = DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * d[i] * d[j]);
    Ok((&cov + cov.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_decay(x: &[f64], t: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        Ok(t.iter().zip(y).map(|(ti, yi)| yi - x[0] * (-x[1] * ti).exp()).collect())
    }

    #[test]
    fn recovers_exponential() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|ti| 2.5 * (-1.3 * ti).exp()).collect();
        let out = minimize(|x| exp_decay(x, &t, &y), &[1.0, 0.5], &[0.0, 0.0], &[10.0, 10.0], &LmOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 2.5).abs() < 1e-7 && (out.x[1] - 1.3).abs() < 1e-7, "{:?}", out.x);
        assert!(out.chi2 < 1e-14);
    }

    #[test]
    fn accepted_steps_never_increase_chi2() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|ti| 2.5 * (-1.3 * ti).exp() + 0.01 * (ti * 17.0).sin()).collect();
        let out = minimize(|x| exp_decay(x, &t, &y), &[0.2, 4.0], &[0.0, 0.0], &[10.0, 10.0], &LmOptions::default()).unwrap();
        let mut last = f64::INFINITY;
        for rec in out.log.iter().filter(|r| r.accepted) {
            assert!(rec.chi2 <= last);
            last = rec.chi2;
        }
        assert!(out.converged);
    }

    #[test]
    fn zero_residual_start_needs_no_iterations() {
        let t = [0.0, 1.0, 2.0];
        let y: Vec<f64> = t.iter().map(|ti: &f64| 2.0 * (-ti).exp()).collect();
        let out = minimize(|x| exp_decay(x, &t, &y), &[2.0, 1.0], &[0.0, 0.0], &[5.0, 5.0], &LmOptions::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.n_iterations, 0);
        assert_eq!(out.chi2, 0.0);
    }

    #[test]
    fn steps_are_clamped_and_logged() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|ti| 2.5 * (-1.3 * ti).exp()).collect();
        // True amplitude lies above the bound.
        let out = minimize(|x| exp_decay(x, &t, &y), &[1.0, 1.0], &[0.0, 0.0], &[2.0, 10.0], &LmOptions::default()).unwrap();
        assert_eq!(out.x[0], 2.0);
        assert!(out.bound_events.iter().any(|e| e.index == 0 && e.clamped == 2.0));
    }

    #[test]
    fn degenerate_parameters_are_reported() {
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|ti| 3.0 * ti).collect();
        // Only the product a·b is identifiable.
        let f = |x: &[f64]| Ok::<_, RotorError>(t.iter().zip(&y).map(|(ti, yi)| yi - x[0] * x[1] * ti).collect());
        let out = minimize(f, &[1.0, 1.0], &[0.0, 0.0], &[10.0, 10.0], &LmOptions::default()).unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let err = invert_normal_matrix(&out.normal_matrix, &names).unwrap_err();
        assert!(err.contains('a') && err.contains('b'), "{err}");
    }

    #[test]
    fn covariance_of_linear_model_is_exact() {
        // y = a + b t with unit weights: covariance = (XᵀX)⁻¹.
        let t: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let y = [1.0, 3.1, 4.9, 7.2, 9.0];
        let f = |x: &[f64]| Ok::<_, RotorError>(t.iter().zip(&y).map(|(ti, yi)| yi - x[0] - x[1] * ti).collect());
        let out = minimize(f, &[0.0, 1.0], &[-100.0, -100.0], &[100.0, 100.0], &LmOptions::default()).unwrap();
        let cov = invert_normal_matrix(&out.normal_matrix, &["a".into(), "b".into()]).unwrap();
        // XᵀX = [[5, 10], [10, 30]], det 50.
        assert!((cov[(0, 0)] - 0.6).abs() < 1e-6);
        assert!((cov[(1, 1)] - 0.1).abs() < 1e-6);
        assert!((cov[(0, 1)] + 0.2).abs() < 1e-6);
        assert_eq!(cov[(0, 1)], cov[(1, 0)]);
    }

    #[test]
    fn forward_and_central_jacobians_agree() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.2).collect();
        let y = vec![0.0; 20];
        let f = |x: &[f64]| exp_decay(x, &t, &y);
        let x = [1.7, 0.8];
        let r0 = f(&x).unwrap();
        let steps = jacobian_steps(&x, &[0.0, 0.0], &[10.0, 10.0], 1e-6);
        let fwd = forward_jacobian(&f, &x, &r0, &steps, &[10.0, 10.0]).unwrap();
        let cen = central_jacobian(&f, &x, &steps).unwrap();
        assert!((&fwd - &cen).norm() / cen.norm() < 1e-5);
    }
}
