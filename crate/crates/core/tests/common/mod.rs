#![allow(dead_code)]

use std::f64::consts::PI;

use rotorsim_core::fitting::{
    central_jacobian, forward_jacobian, jacobian_steps, rabi_model, ramsey_model, spectrum_model, ArgBinding, Dataset, DatasetKind, FitProblem, ModelBinding,
    ModelKind, ParameterSpec, RabiArgs, RamseyArgs, SpectrumArgs,
};
use rotorsim_core::RotorGeometry;

pub const KHZ: f64 = 2.0 * PI * 1e3;
pub const L0: f64 = 7780.0;

pub fn geometry() -> RotorGeometry {
    RotorGeometry::calcium_reference()
}

pub fn rabi_times() -> Vec<f64> {
    (1..=200).map(|i| i as f64 * 2e-6).collect()
}

pub fn rabi_data(omega: f64, sigma: f64, shots: Option<(u32, u64)>) -> Dataset {
    let t = rabi_times();
    let p = rabi_model(&geometry(), 4, L0, &RabiArgs { omega, sigma_l: sigma, detuning: 0.0 }, &t).unwrap();
    match shots {
        Some((n, seed)) => Dataset::simulate(DatasetKind::Rabi, t, &p, n, seed).unwrap(),
        None => Dataset::new(DatasetKind::Rabi, t, p).unwrap(),
    }
}

pub fn rabi_binding(omega: ArgBinding, sigma: ArgBinding) -> ModelBinding {
    ModelBinding::new(ModelKind::Rabi { delta_l: 4, l0: L0 })
        .bind("omega", omega)
        .bind("sigma_l", sigma)
        .bind("detuning", ArgBinding::Fixed(0.0))
}

/// Single Rabi dataset with free Ω and σ_ℓ.
pub fn rabi_problem(data: Dataset, omega0: f64, sigma0: f64) -> FitProblem {
    FitProblem::new(geometry())
        .with_dataset(data, rabi_binding(ArgBinding::param("omega"), ArgBinding::param("sigma_l")))
        .with_parameter(ParameterSpec::for_argument("omega", "omega", omega0))
        .with_parameter(ParameterSpec::for_argument("sigma_l", "sigma_l", sigma0))
}

/// Two Rabi datasets with their own Ω and a shared σ_ℓ.
pub fn joint_rabi_problem(a: Dataset, b: Dataset, omegas: (f64, f64), sigma0: f64) -> FitProblem {
    FitProblem::new(geometry())
        .with_dataset(a, rabi_binding(ArgBinding::param("omega_a"), ArgBinding::param("sigma_l")))
        .with_dataset(b, rabi_binding(ArgBinding::param("omega_b"), ArgBinding::param("sigma_l")))
        .with_parameter(ParameterSpec::for_argument("omega_a", "omega", omegas.0))
        .with_parameter(ParameterSpec::for_argument("omega_b", "omega", omegas.1))
        .with_parameter(ParameterSpec::for_argument("sigma_l", "sigma_l", sigma0))
}

pub const PULSE: f64 = 2e-6;

pub fn ramsey_times() -> Vec<f64> {
    (0..300).map(|i| i as f64 * 2e-6).collect()
}

pub fn ramsey_data(delta_l: i64, sigma: f64, detuning: f64, omega: f64, shots: Option<(u32, u64)>) -> Dataset {
    let t = ramsey_times();
    let args = RamseyArgs { sigma_l: sigma, detuning, omega, pulse_duration: PULSE };
    let p = ramsey_model(&geometry(), delta_l, L0, false, &args, &t).unwrap();
    match shots {
        Some((n, seed)) => Dataset::simulate(DatasetKind::Ramsey, t, &p, n, seed).unwrap(),
        None => Dataset::new(DatasetKind::Ramsey, t, p).unwrap(),
    }
}

/// Finite-pulse Ramsey curves for each Δℓ with per-curve detuning and Ω
/// and a shared σ_ℓ (or γ_ℓ/Δℓ when `sigma_scale` is not 1).
pub fn joint_ramsey_problem(
    data: Vec<(i64, Dataset)>,
    detuning0: f64,
    omega0: f64,
    sigma_param: ParameterSpec,
    sigma_scale: f64,
) -> FitProblem {
    let mut p = FitProblem::new(geometry());
    let name = sigma_param.name.clone();
    for (delta_l, ds) in data {
        let binding = ModelBinding::new(ModelKind::Ramsey { delta_l, l0: L0, ideal_pulses: false })
            .bind("sigma_l", ArgBinding::scaled(name.clone(), sigma_scale))
            .bind("detuning", ArgBinding::param("detuning"))
            .bind("omega", ArgBinding::param("omega"))
            .bind("pulse_duration", ArgBinding::Fixed(PULSE));
        p = p.with_dataset(ds, binding);
    }
    p.with_parameter(sigma_param)
        .with_parameter(ParameterSpec::for_argument("detuning", "detuning", detuning0).per_dataset())
        .with_parameter(ParameterSpec::for_argument("omega", "omega", omega0).per_dataset())
}

pub const THETA_DEG: f64 = 82.4;
pub const PROBE_TIME: f64 = 20e-6;

pub fn spectrum_grid() -> Vec<f64> {
    (-1000..=1000).map(|i| i as f64 * 500.0 * 2.0 * PI).collect()
}

pub fn spectrum_truth() -> SpectrumArgs {
    SpectrumArgs {
        theta: THETA_DEG.to_radians(),
        f_rot: 101e3,
        omega: 10.0 * KHZ,
        probe_time: PROBE_TIME,
        sigma_l: 45.6,
    }
}

pub fn spectrum_data(shots: Option<(u32, u64)>) -> Dataset {
    let x = spectrum_grid();
    let p = spectrum_model(&geometry(), 729e-9, 7, &spectrum_truth(), &x).unwrap();
    match shots {
        Some((n, seed)) => Dataset::simulate(DatasetKind::Spectrum, x, &p, n, seed).unwrap(),
        None => Dataset::new(DatasetKind::Spectrum, x, p).unwrap(),
    }
}

/// Spectrum with free θ, f_rot and carrier Ω; σ_ℓ and probe time fixed.
pub fn spectrum_problem(data: Dataset, theta0: f64, f_rot0: f64, omega0: f64) -> FitProblem {
    let binding = ModelBinding::new(ModelKind::Spectrum { wavelength: 729e-9, max_order: 7 })
        .bind("theta", ArgBinding::param("theta"))
        .bind("f_rot", ArgBinding::param("f_rot"))
        .bind("omega", ArgBinding::param("omega"))
        .bind("probe_time", ArgBinding::Fixed(PROBE_TIME))
        .bind("sigma_l", ArgBinding::Fixed(45.6));
    FitProblem::new(geometry())
        .with_dataset(data, binding)
        .with_parameter(ParameterSpec::for_argument("theta", "theta", theta0))
        .with_parameter(ParameterSpec::for_argument("f_rot", "f_rot", f_rot0))
        .with_parameter(ParameterSpec::for_argument("omega", "omega", omega0))
}

/// Relative difference of forward and central Jacobians, with each column
/// expressed as the residual change over its own step. Columns whose first
/// derivative vanishes (Δ = 0 in a symmetric distribution, a π/2 pulse in
/// Ω) would make a per-column ratio meaningless.
pub fn jacobian_mismatch(f: &dyn Fn(&[f64]) -> rotorsim_core::Result<Vec<f64>>, x: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    let r0 = f(x).unwrap();
    let steps = jacobian_steps(x, lower, upper, 1e-6);
    let fwd = forward_jacobian(&f, x, &r0, &steps, upper).unwrap();
    let cen = central_jacobian(&f, x, &steps).unwrap();
    let scale = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(steps));
    ((&fwd - &cen) * &scale).norm() / (&cen * &scale).norm()
}
