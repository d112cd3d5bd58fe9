use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lm::{invert_normal_matrix, minimize, BoundEvent, LmOptions, LmOutcome, StepRecord};
use super::dataset::binomial_error;
use super::{Dataset, ModelKind};
use crate::error::{Result, RotorError};
use crate::RotorGeometry;

fn default_true() -> bool {
    true
}

fn default_scale() -> f64 {
    1.0
}

/// A fit parameter. A shared parameter has one value across every dataset
/// that references it; otherwise each referencing dataset gets its own copy,
/// reported as `name[i]` with `i` the dataset index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub initial: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(default = "default_true")]
    pub shared: bool,
}

impl ParameterSpec {
    pub fn new(name: impl Into<String>, initial: f64, lower: f64, upper: f64) -> Self {
        Self { name: name.into(), initial, lower, upper, shared: true }
    }

    /// Parameter bound to model argument `argument` with its default box.
    pub fn for_argument(name: impl Into<String>, argument: &str, initial: f64) -> Self {
        let (lower, upper) = default_bounds(argument);
        Self::new(name, initial, lower, upper)
    }

    pub fn per_dataset(mut self) -> Self {
        self.shared = false;
        self
    }
}

/// Default box for a model argument.
pub fn default_bounds(argument: &str) -> (f64, f64) {
    match argument {
        "sigma_l" => (0.0, 1e4),
        "theta" => (0.0, PI / 2.0),
        // Ω enters squared; keep it strictly positive.
        "omega" => (1e-9, 2.0 * PI * 1e6),
        "detuning" => (-2.0 * PI * 1e6, 2.0 * PI * 1e6),
        "f_rot" => (0.0, 1e7),
        "probe_time" | "pulse_duration" => (1e-12, 1.0),
        _ => (f64::NEG_INFINITY, f64::INFINITY),
    }
}

/// Source of one model argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArgBinding {
    Fixed(f64),
    /// argument = scale · parameter
    Param {
        param: String,
        #[serde(default = "default_scale")]
        scale: f64,
    },
}

impl ArgBinding {
    pub fn param(name: impl Into<String>) -> Self {
        ArgBinding::Param { param: name.into(), scale: 1.0 }
    }

    pub fn scaled(name: impl Into<String>, scale: f64) -> Self {
        ArgBinding::Param { param: name.into(), scale }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBinding {
    pub model: ModelKind,
    pub args: BTreeMap<String, ArgBinding>,
}

impl ModelBinding {
    pub fn new(model: ModelKind) -> Self {
        Self { model, args: BTreeMap::new() }
    }

    pub fn bind(mut self, argument: &str, source: ArgBinding) -> Self {
        self.args.insert(argument.to_string(), source);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub lm: LmOptions,
    /// Also start from 5 jittered copies of the initial values and keep the
    /// lowest χ².
    pub multi_start: bool,
    pub seed: u64,
    /// Extra passes that recompute shot-count errors from the fitted model
    /// instead of the observed frequencies, then refit. 0 keeps the
    /// observed-frequency errors.
    pub reweight_passes: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { lm: LmOptions::default(), multi_start: false, seed: 0, reweight_passes: 3 }
    }
}

#[derive(Debug, Clone)]
pub struct FitProblem {
    pub geometry: RotorGeometry,
    pub datasets: Vec<Dataset>,
    /// One binding per dataset, same order.
    pub bindings: Vec<ModelBinding>,
    pub parameters: Vec<ParameterSpec>,
    pub options: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub parameter_names: Vec<String>,
    pub best_fit: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub uncertainties: Vec<f64>,
    pub chi2: f64,
    pub chi2_reduced: f64,
    pub n_points: usize,
    pub n_iterations: usize,
    pub converged: bool,
    pub diagnostic: Option<String>,
    /// Covariance multiplied by χ²_reduced because some dataset had no
    /// per-point errors.
    pub covariance_scaled: bool,
    /// y − model, per dataset.
    pub residuals: Vec<Vec<f64>>,
    pub iteration_log: Vec<StepRecord>,
    pub bound_log: Vec<String>,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.parameter_names.iter().position(|n| n == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.best_fit[i])
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.uncertainties[i])
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| RotorError::FitSetup(format!("report serialization: {e}")))
    }
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Slot(usize, f64),
    Fixed(f64),
}

#[derive(Debug, Clone)]
struct Slot {
    name: String,
    initial: f64,
    lower: f64,
    upper: f64,
}

struct Layout {
    slots: Vec<Slot>,
    sources: Vec<Vec<Source>>,
    errors: Vec<Option<Vec<f64>>>,
}

impl FitProblem {
    pub fn new(geometry: RotorGeometry) -> Self {
        Self {
            geometry,
            datasets: Vec::new(),
            bindings: Vec::new(),
            parameters: Vec::new(),
            options: FitOptions::default(),
        }
    }

    pub fn with_dataset(mut self, dataset: Dataset, binding: ModelBinding) -> Self {
        self.datasets.push(dataset);
        self.bindings.push(binding);
        self
    }

    pub fn with_parameter(mut self, parameter: ParameterSpec) -> Self {
        self.parameters.push(parameter);
        self
    }

    pub fn with_options(mut self, options: FitOptions) -> Self {
        self.options = options;
        self
    }

    /// Names of the free parameters in result order.
    pub fn free_parameter_names(&self) -> Result<Vec<String>> {
        Ok(self.layout()?.slots.into_iter().map(|s| s.name).collect())
    }

    fn layout(&self) -> Result<Layout> {
        if self.datasets.is_empty() {
            return Err(RotorError::FitSetup("no datasets".into()));
        }
        if self.datasets.len() != self.bindings.len() {
            return Err(RotorError::FitSetup(format!(
                "{} datasets but {} model bindings",
                self.datasets.len(),
                self.bindings.len()
            )));
        }
        let mut by_name = BTreeMap::new();
        for (i, p) in self.parameters.iter().enumerate() {
            if by_name.insert(p.name.as_str(), i).is_some() {
                return Err(RotorError::FitSetup(format!("parameter {} declared twice", p.name)));
            }
            if !(p.lower <= p.initial && p.initial <= p.upper) {
                return Err(RotorError::FitSetup(format!(
                    "initial value {} of {} outside [{}, {}]",
                    p.initial, p.name, p.lower, p.upper
                )));
            }
            if !(p.lower < p.upper) {
                return Err(RotorError::FitSetup(format!("empty bounds for {}", p.name)));
            }
        }

        for (d, (ds, b)) in self.datasets.iter().zip(&self.bindings).enumerate() {
            ds.validate()?;
            if ds.kind != b.model.dataset_kind() {
                return Err(RotorError::FitSetup(format!(
                    "dataset {d} is {:?} data but is bound to a {:?} model",
                    ds.kind,
                    b.model.dataset_kind()
                )));
            }
            let wanted = b.model.arguments();
            if let Some(extra) = b.args.keys().find(|k| !wanted.contains(&k.as_str())) {
                return Err(RotorError::FitSetup(format!("dataset {d}: model has no argument {extra}")));
            }
            if let Some(missing) = wanted.iter().find(|a| !b.args.contains_key(**a)) {
                return Err(RotorError::FitSetup(format!("dataset {d}: argument {missing} is not bound")));
            }
            for src in b.args.values() {
                if let ArgBinding::Param { param, scale } = src {
                    if !by_name.contains_key(param.as_str()) {
                        return Err(RotorError::FitSetup(format!("dataset {d}: unknown parameter {param}")));
                    }
                    if !(scale.is_finite() && *scale != 0.0) {
                        return Err(RotorError::FitSetup(format!("dataset {d}: bad scale {scale} for {param}")));
                    }
                }
            }
        }

        let references = |param: &str, d: usize| {
            self.bindings[d]
                .args
                .values()
                .any(|s| matches!(s, ArgBinding::Param { param: p, .. } if p == param))
        };
        // (parameter index, dataset or None for shared) -> slot
        let mut slot_of = BTreeMap::new();
        let mut slots = Vec::new();
        for (pi, p) in self.parameters.iter().enumerate() {
            let users: Vec<usize> = (0..self.datasets.len()).filter(|&d| references(&p.name, d)).collect();
            if users.is_empty() {
                return Err(RotorError::FitSetup(format!("parameter {} is not used by any dataset", p.name)));
            }
            let mut push = |name: String| {
                slots.push(Slot { name, initial: p.initial, lower: p.lower, upper: p.upper });
                slots.len() - 1
            };
            if p.shared {
                let s = push(p.name.clone());
                for d in users {
                    slot_of.insert((pi, d), s);
                }
            } else {
                for d in users {
                    let s = push(format!("{}[{d}]", p.name));
                    slot_of.insert((pi, d), s);
                }
            }
        }

        let n_points: usize = self.datasets.iter().map(Dataset::len).sum();
        if n_points <= slots.len() {
            return Err(RotorError::FitSetup(format!(
                "{n_points} data points do not exceed {} free parameters",
                slots.len()
            )));
        }

        let sources = self
            .bindings
            .iter()
            .enumerate()
            .map(|(d, b)| {
                b.model
                    .arguments()
                    .iter()
                    .map(|a| match &b.args[*a] {
                        ArgBinding::Fixed(v) => Source::Fixed(*v),
                        ArgBinding::Param { param, scale } => Source::Slot(slot_of[&(by_name[param.as_str()], d)], *scale),
                    })
                    .collect()
            })
            .collect();
        let errors = self.datasets.iter().map(Dataset::effective_errors).collect();
        Ok(Layout { slots, sources, errors })
    }

    fn model_args(layout: &Layout, d: usize, values: &[f64]) -> Vec<f64> {
        layout.sources[d]
            .iter()
            .map(|s| match *s {
                Source::Fixed(v) => v,
                Source::Slot(i, scale) => scale * values[i],
            })
            .collect()
    }

    /// Model curve of dataset `dataset` at `x` for free-parameter values
    /// `values` (in [`FitProblem::free_parameter_names`] order).
    pub fn model_curve(&self, values: &[f64], dataset: usize, x: &[f64]) -> Result<Vec<f64>> {
        let layout = self.layout()?;
        if values.len() != layout.slots.len() || dataset >= self.datasets.len() {
            return Err(RotorError::FitSetup("parameter vector or dataset index out of range".into()));
        }
        let args = Self::model_args(&layout, dataset, values);
        self.bindings[dataset].model.evaluate(&self.geometry, &args, x)
    }

    fn model_values(&self, layout: &Layout, values: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.datasets
            .iter()
            .enumerate()
            .map(|(d, ds)| {
                let args = Self::model_args(layout, d, values);
                self.bindings[d].model.evaluate(&self.geometry, &args, &ds.x)
            })
            .collect()
    }

    /// Binomial errors recomputed from model probabilities for datasets
    /// whose errors come from shot counts.
    fn model_errors(&self, layout: &Layout, values: &[f64]) -> Result<Vec<Option<Vec<f64>>>> {
        let models = self.model_values(layout, values)?;
        Ok(self
            .datasets
            .iter()
            .zip(models)
            .zip(&layout.errors)
            .map(|((ds, model), current)| match (&ds.y_err, &ds.shots) {
                (None, Some(shots)) => Some(model.iter().zip(shots).map(|(&p, &n)| binomial_error(p, n)).collect()),
                _ => current.clone(),
            })
            .collect())
    }

    fn weighted_residuals(&self, layout: &Layout, errors: &[Option<Vec<f64>>], values: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (d, ds) in self.datasets.iter().enumerate() {
            let args = Self::model_args(layout, d, values);
            let model = self.bindings[d].model.evaluate(&self.geometry, &args, &ds.x)?;
            match &errors[d] {
                Some(err) => out.extend(ds.y.iter().zip(&model).zip(err).map(|((y, m), e)| (y - m) / e)),
                None => out.extend(ds.y.iter().zip(&model).map(|(y, m)| y - m)),
            }
        }
        Ok(out)
    }
}

/// Weighted least-squares fit of every dataset against its bound model.
pub fn fit(problem: &FitProblem) -> Result<FitResult> {
    let layout = problem.layout()?;
    let names: Vec<String> = layout.slots.iter().map(|s| s.name.clone()).collect();
    let lower: Vec<f64> = layout.slots.iter().map(|s| s.lower).collect();
    let upper: Vec<f64> = layout.slots.iter().map(|s| s.upper).collect();
    let initial: Vec<f64> = layout.slots.iter().map(|s| s.initial).collect();

    let mut starts = vec![initial.clone()];
    if problem.options.multi_start {
        let mut rng = ChaCha8Rng::seed_from_u64(problem.options.seed);
        for _ in 0..5 {
            starts.push(
                layout
                    .slots
                    .iter()
                    .map(|s| {
                        let range = if (s.upper - s.lower).is_finite() { s.upper - s.lower } else { 1.0 };
                        let u: f64 = rng.random_range(-1.0..=1.0);
                        let jittered = s.initial * (1.0 + 0.2 * u) + if s.initial == 0.0 { 0.01 * range * u } else { 0.0 };
                        jittered.clamp(s.lower, s.upper)
                    })
                    .collect(),
            );
        }
    }

    let errors = layout.errors.clone();
    let residual = |v: &[f64]| problem.weighted_residuals(&layout, &errors, v);
    let mut best: Option<LmOutcome> = None;
    for (k, start) in starts.iter().enumerate() {
        let outcome = match minimize(residual, start, &lower, &upper, &problem.options.lm) {
            Ok(o) => o,
            // A jittered start may land where the model is undefined.
            Err(e) if k > 0 => {
                log::debug!("multi-start {k} failed: {e}");
                continue;
            }
            Err(e) => return Err(e),
        };
        let better = match &best {
            None => true,
            Some(b) => (outcome.converged && !b.converged) || (outcome.converged == b.converged && outcome.chi2 < b.chi2),
        };
        if better {
            best = Some(outcome);
        }
    }
    let mut outcome = best.expect("the unjittered start either succeeds or returns early");

    // Observed frequencies near 0 or 1 understate their own variance and
    // pull the fit toward them; reweight from the model and refit.
    let reweightable = problem.datasets.iter().any(|d| d.y_err.is_none() && d.shots.is_some());
    if reweightable {
        for pass in 1..=problem.options.reweight_passes {
            let errors = problem.model_errors(&layout, &outcome.x)?;
            let residual = |v: &[f64]| problem.weighted_residuals(&layout, &errors, v);
            let next = minimize(residual, &outcome.x, &lower, &upper, &problem.options.lm)?;
            let shift = next
                .x
                .iter()
                .zip(&outcome.x)
                .map(|(a, b)| ((a - b) / b.abs().max(f64::MIN_POSITIVE)).abs())
                .fold(0.0, f64::max);
            let mut log = std::mem::take(&mut outcome.log);
            log.extend(next.log.iter().map(|r| StepRecord { pass, ..r.clone() }));
            let mut bound_events = std::mem::take(&mut outcome.bound_events);
            bound_events.extend(next.bound_events.iter().cloned());
            let iterations = outcome.n_iterations + next.n_iterations;
            outcome = LmOutcome { log, bound_events, n_iterations: iterations, ..next };
            if shift < 1e-9 {
                break;
            }
        }
    }

    let n_points: usize = problem.datasets.iter().map(Dataset::len).sum();
    let dof = (n_points - names.len()) as f64;
    let chi2_reduced = outcome.chi2 / dof;
    let covariance_scaled = layout.errors.iter().any(Option::is_none);
    let mut converged = outcome.converged;
    let mut diagnostic = outcome.diagnostic.clone();
    let p = names.len();
    let covariance = match invert_normal_matrix(&outcome.normal_matrix, &names) {
        Ok(c) => {
            if covariance_scaled {
                c * chi2_reduced
            } else {
                c
            }
        }
        Err(msg) => {
            log::warn!("{msg}");
            converged = false;
            diagnostic = Some(msg);
            DMatrix::from_element(p, p, f64::NAN)
        }
    };
    let uncertainties = (0..p).map(|i| covariance[(i, i)].max(0.0).sqrt()).collect();
    if !converged {
        log::warn!("fit did not converge: {}", diagnostic.as_deref().unwrap_or("unknown reason"));
    }

    let mut residuals = Vec::with_capacity(problem.datasets.len());
    for (d, ds) in problem.datasets.iter().enumerate() {
        let args = FitProblem::model_args(&layout, d, &outcome.x);
        let model = problem.bindings[d].model.evaluate(&problem.geometry, &args, &ds.x)?;
        residuals.push(ds.y.iter().zip(&model).map(|(y, m)| y - m).collect());
    }
    let bound_log = outcome
        .bound_events
        .iter()
        .map(|BoundEvent { iteration, index, attempted, clamped }| {
            format!("iteration {iteration}: {} clamped from {attempted} to {clamped}", names[*index])
        })
        .collect();

    Ok(FitResult {
        best_fit: outcome.x,
        covariance: (0..p).map(|i| (0..p).map(|j| covariance[(i, j)]).collect()).collect(),
        uncertainties,
        chi2: outcome.chi2,
        chi2_reduced,
        n_points,
        n_iterations: outcome.n_iterations,
        converged,
        diagnostic,
        covariance_scaled,
        residuals,
        iteration_log: outcome.log,
        bound_log,
        parameter_names: names,
    })
}
