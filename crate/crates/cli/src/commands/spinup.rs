use rotorsim_core::constants::HBAR;
use rotorsim_core::spinup::{
    build_waveform, default_dt, integrate_trajectory, max_stable_dt, monte_carlo_release, sample_thermal_tilt, IntegrationOptions,
    ReleaseEnsembleResult, SpinUpWaveform, ThermalOccupation, OBSERVATION_WINDOW,
};
use rotorsim_core::RotorError;
use serde::Serialize;

use super::{write_file, Context, Stream};
use crate::config::{non_negative, positive, section, TWO_PI, US};
use crate::error::{CliError, CliResult};
use crate::svg::{self, Panel, Series, PALETTE};
use crate::trace::format_value;

#[derive(Serialize)]
struct SpinupReport<'a> {
    seed: u64,
    dt_s: f64,
    n_traj: usize,
    waveform: &'a SpinUpWaveform,
    result: &'a ReleaseEnsembleResult,
}

fn csv_writer(path: &std::path::Path) -> CliResult<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))
}

pub fn cmd_spinup(ctx: &Context) -> CliResult<()> {
    let cfg = section(&ctx.config.spinup, "spinup")?;
    let g = ctx.config.geometry.rotor()?;
    let waveform = build_waveform(
        non_negative("spinup.f_target_hz", cfg.f_target_hz)?,
        positive("spinup.t_spin_us", cfg.t_spin_us)? * US,
        positive("spinup.t_release_us", cfg.t_release_us)? * US,
        TWO_PI * positive("spinup.omega_tilt_hz", cfg.omega_tilt_hz)?,
    )?;
    let occupation = match (cfg.mean_occupation, cfg.temperature_mk) {
        (Some(n), None) => ThermalOccupation::MeanOccupation(non_negative("spinup.mean_occupation", n)?),
        (None, Some(t)) => ThermalOccupation::Temperature(non_negative("spinup.temperature_mk", t)? * 1e-3),
        _ => return Err(CliError::usage("spinup: give exactly one of mean_occupation and temperature_mk")),
    };
    let dt = match cfg.dt_s {
        Some(dt) => {
            let limit = max_stable_dt(&waveform, &g);
            if positive("spinup.dt_s", dt)? > limit {
                return Err(CliError::usage(format!("spinup.dt_s: must not exceed the stable step {limit:e} s")));
            }
            dt
        }
        None => default_dt(&waveform, &g),
    };
    if cfg.n_traj < 2 {
        return Err(CliError::usage(format!("spinup.n_traj: need at least 2, got {}", cfg.n_traj)));
    }

    let result = monte_carlo_release(cfg.n_traj, occupation, &waveform, &g, dt, ctx.stream_seed(Stream::Ensemble))?;
    let report = SpinupReport { seed: ctx.seed, dt_s: dt, n_traj: cfg.n_traj, waveform: &waveform, result: &result };
    let json = serde_json::to_string_pretty(&report).expect("report is serializable");
    let report_path = ctx.write("spinup_report.json", &(json + "\n"))?;
    println!(
        "spinup: {} trajectories, l0_est = {:.1}, sigma_l_est = {:.1}, f_rot = {:.1} Hz -> {}",
        result.trajectories_kept,
        result.l0_est,
        result.sigma_l_est,
        result.final_f_rot_mean,
        report_path.display()
    );

    let path = ctx.output("waveform.csv")?;
    let mut w = csv_writer(&path)?;
    let mut header = vec!["time_s".to_string(), "alpha0_rad".into(), "amplitude_norm".into()];
    header.extend((1..=8).map(|i| format!("v_{i}")));
    w.write_record(&header).map_err(|e| CliError::io(&path, e))?;
    for s in waveform.samples(cfg.waveform_points) {
        let mut row = vec![format_value(s.time), format_value(s.alpha0), format_value(s.amplitude)];
        row.extend(s.voltages.iter().map(|v| format_value(*v)));
        w.write_record(&row).map_err(|e| CliError::io(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    // The first trajectory of the ensemble, resampled for inspection.
    let seed = result.seeds[0];
    let with_seed = |e: RotorError| -> CliError {
        RotorError::Trajectory { index: 0, seed, source: Box::new(e) }.into()
    };
    let initial = sample_thermal_tilt(occupation, &waveform, &g, seed).map_err(with_seed)?;
    let t_end = waveform.total_duration() + OBSERVATION_WINDOW;
    let steps = ((t_end - initial.time) / dt).ceil() as usize;
    let sample_every = (steps / cfg.trajectory_points.max(2).saturating_sub(1)).max(1);
    let trajectory =
        integrate_trajectory(&initial, &waveform, &g, dt, t_end, IntegrationOptions { sample_every }).map_err(with_seed)?;

    let path = ctx.output("trajectory.csv")?;
    let mut w = csv_writer(&path)?;
    w.write_record(["time_s", "x1_m", "y1_m", "x2_m", "y2_m", "orientation_rad", "rotation_hz", "l_hbar"])
        .map_err(|e| CliError::io(&path, e))?;
    for s in &trajectory.samples {
        let row = [
            s.time,
            s.positions[0][0],
            s.positions[0][1],
            s.positions[1][0],
            s.positions[1][1],
            s.orientation(),
            s.rotation_rate() / TWO_PI,
            s.rotor_angular_momentum(g.ion_mass) / HBAR,
        ];
        w.write_record(row.iter().map(|v| format_value(*v))).map_err(|e| CliError::io(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    if ctx.svg {
        let ms: Vec<f64> = trajectory.samples.iter().map(|s| s.time * 1e3).collect();
        let rate: Vec<f64> = trajectory.samples.iter().map(|s| s.rotation_rate() / TWO_PI * 1e-3).collect();
        let target: Vec<f64> = trajectory
            .samples
            .iter()
            .map(|s| waveform.alpha0_rate(s.time) / TWO_PI * 1e-3)
            .collect();
        let panel = Panel::new(
            format!("Spin-up to {} kHz, trajectory seed {seed}", cfg.f_target_hz * 1e-3),
            "time (ms)",
            "rotation frequency (kHz)",
        )
        .with(Series::new("crystal", &ms, &rate, PALETTE[0]))
        .with(Series::new("quadrupole", &ms, &target, PALETTE[1]).thin());
        let path = ctx.output("spinup.svg")?;
        write_file(&path, &svg::render(&[panel]))?;
    }
    Ok(())
}
