use std::collections::BTreeMap;
use std::f64::consts::PI;

use rotorsim_core::fitting::{
    default_bounds, fit, ArgBinding, Dataset, DatasetKind, FitOptions, FitProblem, FitResult, LmOptions,
    ModelBinding, ModelKind, ParameterSpec,
};
use serde::Serialize;

use super::{Context, Stream};
use crate::config::{section, ArgSource, FitDatasetConfig, FitModelName, RunConfig, TWO_PI, US};
use crate::error::{CliError, CliResult};
use crate::svg::{self, Panel, Series, PALETTE};
use crate::trace::{Abscissa, TraceFile};

/// Config key and SI factor of each model argument.
fn argument_key(argument: &str) -> (&'static str, f64) {
    match argument {
        "omega" => ("omega_hz", TWO_PI),
        "detuning" => ("detuning_hz", TWO_PI),
        "sigma_l" => ("sigma_l", 1.0),
        "theta" => ("theta_deg", PI / 180.0),
        "f_rot" => ("f_rot_hz", 1.0),
        "probe_time" => ("probe_time_us", US),
        "pulse_duration" => ("pulse_duration_us", US),
        other => unreachable!("unknown model argument {other}"),
    }
}

#[derive(Serialize)]
struct FitReport<'a> {
    datasets: Vec<String>,
    /// Config argument keys each parameter is bound to; the parameter is
    /// in the unit of those keys, divided by any binding scale.
    bound_to: BTreeMap<String, Vec<String>>,
    #[serde(flatten)]
    result: &'a FitResult,
}

/// Use of a parameter by one model argument.
struct Use {
    argument: &'static str,
    factor: f64,
}

fn model_kind(config: &RunConfig, ds: &FitDatasetConfig, path: &str) -> CliResult<ModelKind> {
    let delta_l = || ds.delta_l.ok_or_else(|| CliError::usage(format!("{path}.delta_l: required for this model")));
    let l0 = || -> CliResult<f64> {
        let g = config.geometry.rotor()?;
        config.state()?.l0(&g)
    };
    Ok(match ds.model {
        FitModelName::Spectrum => ModelKind::Spectrum {
            wavelength: config.geometry.wavelength()?,
            max_order: match ds.max_order {
                Some(n) if n >= 0 => n,
                _ => return Err(CliError::usage(format!("{path}.max_order: required, >= 0"))),
            },
        },
        FitModelName::Rabi => ModelKind::Rabi { delta_l: delta_l()?, l0: l0()? },
        FitModelName::Ramsey => ModelKind::Ramsey { delta_l: delta_l()?, l0: l0()?, ideal_pulses: ds.ideal_pulses },
    })
}

fn load_dataset(config: &RunConfig, ds: &FitDatasetConfig, kind: DatasetKind, path: &str) -> CliResult<Dataset> {
    let file = config.resolve(&ds.path);
    let trace = TraceFile::load(&file)?;
    let expected = if kind == DatasetKind::Spectrum { Abscissa::Detuning } else { Abscissa::Time };
    if trace.abscissa != expected {
        return Err(CliError::usage(format!(
            "{path}.path: {} has column {} but the model needs {}",
            file.display(),
            trace.abscissa.column(),
            expected.column()
        )));
    }
    let x = match expected {
        Abscissa::Detuning => trace.x.iter().map(|f| TWO_PI * f).collect(),
        Abscissa::Time => trace.x.clone(),
    };
    let in_file = |e: rotorsim_core::RotorError| CliError::Io(format!("{}: {e}", file.display()));
    let mut dataset = Dataset::new(kind, x, trace.excitation.clone()).map_err(in_file)?;
    match (ds.shots, trace.excitation_err) {
        (Some(0), _) => return Err(CliError::usage(format!("{path}.shots: must be > 0"))),
        (Some(n), err) => {
            if err.is_some() {
                log::info!("{}: excitation_err ignored, weights follow {n} shots", file.display());
            }
            dataset = dataset.with_shots(vec![n; trace.x.len()]).map_err(in_file)?;
        }
        (None, Some(err)) => dataset = dataset.with_errors(err).map_err(in_file)?,
        (None, None) => {}
    }
    Ok(dataset)
}

/// Translates the config into a [`FitProblem`] whose parameters live in
/// the config's units; the SI conversion is folded into binding scales.
pub fn build_problem(ctx: &Context) -> CliResult<FitProblem> {
    let config = &ctx.config;
    let cfg = section(&config.fit, "fit")?;
    if cfg.datasets.is_empty() {
        return Err(CliError::usage("fit.datasets: need at least one dataset"));
    }
    let mut problem = FitProblem::new(config.geometry.rotor()?);
    let mut uses: BTreeMap<&str, Vec<Use>> = BTreeMap::new();

    for (i, ds) in cfg.datasets.iter().enumerate() {
        let path = format!("fit.datasets[{i}]");
        let model = model_kind(config, ds, &path)?;
        let arguments = model.arguments();
        let keys: Vec<&str> = arguments.iter().map(|a| argument_key(a).0).collect();
        if let Some(extra) = ds.args.keys().find(|k| !keys.contains(&k.as_str())) {
            return Err(CliError::usage(format!(
                "{path}.args.{extra}: not an argument of this model (expected {})",
                keys.join(", ")
            )));
        }
        let mut binding = ModelBinding::new(model.clone());
        for &argument in arguments {
            let (key, unit) = argument_key(argument);
            let source = ds
                .args
                .get(key)
                .ok_or_else(|| CliError::usage(format!("{path}.args.{key}: missing")))?;
            let bound = match source {
                ArgSource::Fixed(v) => ArgBinding::Fixed(v * unit),
                ArgSource::Param(name) | ArgSource::Scaled { param: name, .. } => {
                    let scale = match source {
                        ArgSource::Scaled { scale, .. } => *scale,
                        _ => 1.0,
                    };
                    uses.entry(name.as_str()).or_default().push(Use { argument, factor: scale * unit });
                    ArgBinding::scaled(name.clone(), scale * unit)
                }
            };
            binding = binding.bind(argument, bound);
        }
        let dataset = load_dataset(config, ds, model.dataset_kind(), &path)?;
        problem = problem.with_dataset(dataset, binding);
    }

    for p in &cfg.parameters {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for u in uses.get(p.name.as_str()).into_iter().flatten() {
            let (a, b) = default_bounds(u.argument);
            let (a, b) = (a / u.factor, b / u.factor);
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
        let mut parameter = ParameterSpec::new(p.name.clone(), p.initial, p.lower.unwrap_or(lo), p.upper.unwrap_or(hi));
        if !p.shared {
            parameter = parameter.per_dataset();
        }
        problem = problem.with_parameter(parameter);
    }

    problem = problem.with_options(FitOptions {
        lm: LmOptions {
            max_iterations: cfg.max_iterations.unwrap_or(LmOptions::default().max_iterations),
            ..LmOptions::default()
        },
        multi_start: cfg.multi_start,
        seed: ctx.stream_seed(Stream::MultiStart),
        reweight_passes: cfg.reweight_passes.unwrap_or(FitOptions::default().reweight_passes),
    });
    Ok(problem)
}

fn bound_keys(ctx: &Context) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let Some(cfg) = &ctx.config.fit else { return out };
    for ds in &cfg.datasets {
        for (key, source) in &ds.args {
            if let ArgSource::Param(name) | ArgSource::Scaled { param: name, .. } = source {
                let keys = out.entry(name.clone()).or_default();
                if !keys.contains(key) {
                    keys.push(key.clone());
                }
            }
        }
    }
    out
}

fn overlay(ctx: &Context, problem: &FitProblem, result: &FitResult) -> CliResult<String> {
    let cfg = section(&ctx.config.fit, "fit")?;
    let mut panels = Vec::new();
    for (d, ds) in problem.datasets.iter().enumerate() {
        let (scale, label) = match ds.kind {
            DatasetKind::Spectrum => (1e-3 / TWO_PI, "detuning from carrier (kHz)"),
            DatasetKind::Rabi => (1.0 / US, "pulse time (us)"),
            DatasetKind::Ramsey => (1.0 / US, "wait time (us)"),
        };
        let (lo, hi) = ds.x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let n = (4 * ds.len()).max(400);
        let dense: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let model = problem.model_curve(&result.best_fit, d, &dense)?;
        let data_x: Vec<f64> = ds.x.iter().map(|x| x * scale).collect();
        let model_x: Vec<f64> = dense.iter().map(|x| x * scale).collect();
        panels.push(
            Panel::new(cfg.datasets[d].path.display().to_string(), label, "excitation")
                .with(Series::new("data", &data_x, &ds.y, PALETTE[5]).thin())
                .with(Series::new("model", &model_x, &model, PALETTE[d % 5])),
        );
    }
    Ok(svg::render(&panels))
}

pub fn cmd_fit(ctx: &Context) -> CliResult<()> {
    let problem = build_problem(ctx)?;
    let result = fit(&problem)?;
    let report = FitReport {
        datasets: section(&ctx.config.fit, "fit")?
            .datasets
            .iter()
            .map(|d| d.path.display().to_string())
            .collect(),
        bound_to: bound_keys(ctx),
        result: &result,
    };
    let json = serde_json::to_string_pretty(&report).expect("report is serializable");
    let path = ctx.write("fit_report.json", &(json + "\n"))?;
    if ctx.svg {
        let svg = overlay(ctx, &problem, &result)?;
        ctx.write("fit.svg", &svg)?;
    }

    println!(
        "fit: {} points, chi2 = {:.6e}, chi2_reduced = {:.4}, {} iterations, converged = {} -> {}",
        result.n_points,
        result.chi2,
        result.chi2_reduced,
        result.n_iterations,
        result.converged,
        path.display()
    );
    for ((name, value), err) in result.parameter_names.iter().zip(&result.best_fit).zip(&result.uncertainties) {
        println!("  {name} = {value:.6} +/- {err:.3e}");
    }
    if !result.converged {
        return Err(CliError::NotConverged(
            result.diagnostic.clone().unwrap_or_else(|| "iteration limit reached".into()),
        ));
    }
    Ok(())
}
