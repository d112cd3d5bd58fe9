use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rotorsim_core::bessel::bessel_j_table;
use rotorsim_core::dynamics::{rabi_trace, ramsey_trace, spectrum_scan, RamseyConfig, SpectrumScan};
use rotorsim_core::fitting::{fit, ArgBinding, Dataset, DatasetKind, FitProblem, ModelBinding, ModelKind, ParameterSpec};
use rotorsim_core::spinup::{build_waveform, default_dt, integrate_trajectory, pinned_equilibrium, IntegrationOptions};
use rotorsim_core::{AngularDistribution, LaserDrive, RotorGeometry};

const KHZ: f64 = 2.0 * PI * 1e3;

fn setup() -> (RotorGeometry, AngularDistribution) {
    let g = RotorGeometry::calcium_reference();
    let dist = AngularDistribution::gaussian(g.mean_quantum_number(100e3).unwrap(), 45.6).unwrap();
    (g, dist)
}

fn bessel(c: &mut Criterion) {
    c.bench_function("bessel_j_table/40@3.57", |b| b.iter(|| bessel_j_table(40, black_box(3.5745))));
}

fn dynamics(c: &mut Criterion) {
    let (g, dist) = setup();
    let times: Vec<f64> = (0..200).map(|i| i as f64 * 2e-6).collect();
    let drive = LaserDrive::new(729e-9, 82.4f64.to_radians(), 6.7 * KHZ, 4).unwrap();
    c.bench_function("rabi_trace/200", |b| b.iter(|| rabi_trace(&g, &dist, &drive, black_box(&times)).unwrap()));

    let grid: Vec<f64> = (-1000..=1000).map(|i| f64::from(i) * 500.0 * 2.0 * PI).collect();
    let request = SpectrumScan::request(grid, 20e-6, SpectrumScan::orders_up_to(5));
    let carrier = LaserDrive::new(729e-9, 82.4f64.to_radians(), 8.0 * KHZ, 0).unwrap();
    c.bench_function("spectrum_scan/2001x11", |b| {
        b.iter(|| spectrum_scan(&g, &dist, &carrier, 101e3, black_box(&request)).unwrap())
    });

    let mut ramsey = RamseyConfig::ideal(4, 6.0 * KHZ, times.clone());
    c.bench_function("ramsey_trace/ideal/200", |b| b.iter(|| ramsey_trace(&g, &dist, black_box(&ramsey)).unwrap()));
    ramsey.ideal_pulses = false;
    ramsey.omega_rabi = 50.0 * KHZ;
    ramsey.pulse_duration = PI / 2.0 / ramsey.omega_rabi;
    c.bench_function("ramsey_trace/finite/200", |b| b.iter(|| ramsey_trace(&g, &dist, black_box(&ramsey)).unwrap()));
}

fn spinup(c: &mut Criterion) {
    let g = RotorGeometry::calcium_reference();
    let w = build_waveform(100e3, 50e-6, 50e-6, 2.0 * PI * 280e3).unwrap();
    let start = pinned_equilibrium(&g, &w).unwrap();
    let dt = default_dt(&w, &g);
    let mut group = c.benchmark_group("spinup");
    group.sample_size(10);
    group.bench_function("trajectory/150us", |b| {
        b.iter(|| integrate_trajectory(&start, &w, &g, dt, w.total_duration(), IntegrationOptions::default()).unwrap())
    });
    group.finish();
}

fn fitting(c: &mut Criterion) {
    let (g, dist) = setup();
    let times: Vec<f64> = (0..200).map(|i| i as f64 * 2e-6).collect();
    let mut problem = FitProblem::new(g);
    for (name, omega) in [("omega_a", 6.7), ("omega_b", 3.0)] {
        let drive = LaserDrive::new(729e-9, 82.4f64.to_radians(), omega * KHZ, 4).unwrap();
        let p = rabi_trace(&g, &dist, &drive, &times).unwrap();
        let data = Dataset::simulate(DatasetKind::Rabi, times.clone(), &p, 100, 1).unwrap();
        let binding = ModelBinding::new(ModelKind::Rabi { delta_l: 4, l0: dist.l0() })
            .bind("omega", ArgBinding::param(name))
            .bind("sigma_l", ArgBinding::param("sigma"))
            .bind("detuning", ArgBinding::Fixed(0.0));
        problem = problem
            .with_dataset(data, binding)
            .with_parameter(ParameterSpec::for_argument(name, "omega", 0.9 * omega * KHZ));
    }
    problem = problem.with_parameter(ParameterSpec::for_argument("sigma", "sigma_l", 60.0));
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("joint_rabi/2x200", |b| b.iter(|| fit(black_box(&problem)).unwrap()));
    group.finish();
}

criterion_group!(benches, bessel, dynamics, spinup, fitting);
criterion_main!(benches);
