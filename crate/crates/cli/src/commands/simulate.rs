use rotorsim_core::dynamics::{
    first_peak, rabi_trace, ramsey_contrast, ramsey_trace, spectrum_scan, RamseyConfig, SpectrumScan,
};
use rotorsim_core::fitting::DatasetKind;
use rotorsim_core::{AngularDistribution, LaserDrive, RotorGeometry};

use super::{measure, Context, Stream};
use crate::config::{finite, positive, section, shots, TWO_PI, US};
use crate::error::{CliError, CliResult};
use crate::svg::{self, Panel, Series, PALETTE};
use crate::trace::{Abscissa, TraceFile};

/// Geometry, ℓ0 and σ_ℓ shared by the three spectroscopy commands.
fn rotor_state(ctx: &Context) -> CliResult<(RotorGeometry, AngularDistribution, f64)> {
    let g = ctx.config.geometry.rotor()?;
    let state = ctx.config.state()?;
    let dist = AngularDistribution::gaussian(state.l0(&g)?, state.sigma_l(&g)?)?;
    Ok((g, dist, state.f_rot_hz))
}

fn drive(ctx: &Context, omega_hz: f64, path: &str, delta_l: i64) -> CliResult<LaserDrive> {
    let geometry = &ctx.config.geometry;
    Ok(LaserDrive::new(
        geometry.wavelength()?,
        geometry.theta()?,
        TWO_PI * positive(path, omega_hz)?,
        delta_l,
    )?)
}

pub fn cmd_spectrum(ctx: &Context) -> CliResult<()> {
    let cfg = section(&ctx.config.spectrum, "spectrum")?;
    let (g, dist, f_rot) = rotor_state(ctx)?;
    let grid_hz = cfg.detuning_grid_hz.points("spectrum.detuning_grid_hz")?;
    if grid_hz.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::usage("spectrum.detuning_grid_hz: values must be strictly increasing"));
    }
    let probe = positive("spectrum.probe_time_us", cfg.probe_time_us)? * US;
    let laser = drive(ctx, cfg.omega_hz, "spectrum.omega_hz", 0)?;
    let max_order = cfg.max_order.unwrap_or_else(|| laser.max_coupled_order(g.r_e) + 1);
    if max_order < 0 {
        return Err(CliError::usage(format!("spectrum.max_order: must be >= 0, got {max_order}")));
    }
    let shots = shots("spectrum.shots", cfg.shots)?;

    let request = SpectrumScan::request(
        grid_hz.iter().map(|f| TWO_PI * f).collect(),
        probe,
        SpectrumScan::orders_up_to(max_order),
    );
    let scan = spectrum_scan(&g, &dist, &laser, f_rot, &request)?;
    if scan.groups_overlap {
        log::warn!("neighbouring sideband groups overlap; the independent-group model is approximate");
    }
    let (y, err) = measure(DatasetKind::Spectrum, &request.detuning_grid, &scan.excitation, shots, ctx.stream_seed(Stream::ShotNoise))?;
    let trace = TraceFile::new(Abscissa::Detuning, grid_hz, y, err);
    let csv = ctx.output("spectrum.csv")?;
    trace.save(&csv)?;
    println!("spectrum: {} points, orders up to ±{max_order} -> {}", trace.len(), csv.display());

    if ctx.svg {
        let khz: Vec<f64> = trace.x.iter().map(|f| f * 1e-3).collect();
        let mut panel = Panel::new(
            format!("Sideband spectrum, f_rot = {} kHz", f_rot * 1e-3),
            "detuning from carrier (kHz)",
            "excitation",
        )
        .with(Series::new("excitation", &khz, &trace.excitation, PALETTE[0]));
        panel.annotations = (-max_order..=max_order)
            .map(|n| (n as f64 * f_rot * 1e-3, if n == 0 { "0".to_string() } else { format!("{n:+}") }))
            .collect();
        ctx.write("spectrum.svg", &svg::render(&[panel]))?;
    }
    Ok(())
}

pub fn cmd_rabi(ctx: &Context) -> CliResult<()> {
    let cfg = section(&ctx.config.rabi, "rabi")?;
    let (g, dist, _) = rotor_state(ctx)?;
    let times: Vec<f64> = cfg
        .time_grid_us
        .points("rabi.time_grid_us")?
        .iter()
        .map(|t| t * US)
        .collect();
    if times.iter().any(|t| *t < 0.0) {
        return Err(CliError::usage("rabi.time_grid_us: times must be >= 0"));
    }
    let laser = drive(ctx, cfg.omega_hz, "rabi.omega_hz", cfg.delta_l)?
        .with_detuning(TWO_PI * finite("rabi.detuning_hz", cfg.detuning_hz)?);
    let shots = shots("rabi.shots", cfg.shots)?;

    let p = rabi_trace(&g, &dist, &laser, &times)?;
    let (y, err) = measure(DatasetKind::Rabi, &times, &p, shots, ctx.stream_seed(Stream::ShotNoise))?;
    let trace = TraceFile::new(Abscissa::Time, times, y, err);
    let csv = ctx.output("rabi.csv")?;
    trace.save(&csv)?;
    match first_peak(&trace.x, &p) {
        Some((t, v)) => println!(
            "rabi: {} points, first peak {v:.4} at {:.1} us -> {}",
            trace.len(),
            t / US,
            csv.display()
        ),
        None => println!("rabi: {} points -> {}", trace.len(), csv.display()),
    }

    if ctx.svg {
        let us: Vec<f64> = trace.x.iter().map(|t| t / US).collect();
        let panel = Panel::new(
            format!("Rabi oscillation on order {:+}, Omega = 2pi x {} kHz", cfg.delta_l, cfg.omega_hz * 1e-3),
            "pulse time (us)",
            "excitation",
        )
        .with(Series::new("excitation", &us, &trace.excitation, PALETTE[0]));
        ctx.write("rabi.svg", &svg::render(&[panel]))?;
    }
    Ok(())
}

pub fn cmd_ramsey(ctx: &Context) -> CliResult<()> {
    let cfg = section(&ctx.config.ramsey, "ramsey")?;
    let (g, dist, _) = rotor_state(ctx)?;
    let waits: Vec<f64> = cfg
        .wait_grid_us
        .points("ramsey.wait_grid_us")?
        .iter()
        .map(|t| t * US)
        .collect();
    if waits.iter().any(|t| *t < 0.0) {
        return Err(CliError::usage("ramsey.wait_grid_us: wait times must be >= 0"));
    }
    let detuning = TWO_PI * finite("ramsey.detuning_hz", cfg.detuning_hz)?;
    let mut sequence = RamseyConfig::ideal(cfg.delta_l, detuning, waits.clone());
    if let Some(pulse) = &cfg.pulse {
        sequence.ideal_pulses = false;
        sequence.pulse_duration = positive("ramsey.pulse.duration_us", pulse.duration_us)? * US;
        sequence.omega_rabi = TWO_PI * positive("ramsey.pulse.omega_hz", pulse.omega_hz)?;
    }
    let shots = shots("ramsey.shots", cfg.shots)?;

    let p = ramsey_trace(&g, &dist, &sequence)?;
    let (y, err) = measure(DatasetKind::Ramsey, &waits, &p, shots, ctx.stream_seed(Stream::ShotNoise))?;
    let trace = TraceFile::new(Abscissa::Time, waits, y, err);
    let csv = ctx.output("ramsey.csv")?;
    trace.save(&csv)?;
    println!("ramsey: {} points -> {}", trace.len(), csv.display());

    if ctx.svg {
        let us: Vec<f64> = trace.x.iter().map(|t| t / US).collect();
        let upper: Vec<f64> = trace
            .x
            .iter()
            .map(|&t| 0.5 * (1.0 + ramsey_contrast(&g, &dist, cfg.delta_l, t)))
            .collect();
        let panel = Panel::new(
            format!("Ramsey fringe on order {:+}", cfg.delta_l),
            "wait time (us)",
            "excitation",
        )
        .with(Series::new("excitation", &us, &trace.excitation, PALETTE[0]))
        .with(Series::new("contrast envelope", &us, &upper, PALETTE[1]).thin());
        ctx.write("ramsey.svg", &svg::render(&[panel]))?;
    }
    Ok(())
}
