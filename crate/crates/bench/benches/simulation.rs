use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ddsim_core::analysis::{fidelity_map, symmetric_axis};
use ddsim_core::noise::{ou_trajectory, ControlError, GaussianEnsemble, NoiseProcess};
use ddsim_core::sequence::{expand_sequence, Family, SequenceSpec};
use ddsim_core::simulator::{
    cycle_propagator, ensemble_average, InitialState, Sampling,
};

const T_P: f64 = 10.6;
const TAU_D: f64 = 21.2;

fn bench_cycle_propagator(c: &mut Criterion) {
    let mut group = c.benchmark_group("cycle_propagator");
    let cases = [
        ("xy4", SequenceSpec::new(Family::Xy4, TAU_D, T_P)),
        ("kdd", SequenceSpec::new(Family::Kdd, TAU_D, T_P)),
        ("cdd3", SequenceSpec::new(Family::Cdd, TAU_D, T_P).level(3)),
        (
            "xy4-knill",
            SequenceSpec::new(Family::Xy4, TAU_D, T_P).robust(true),
        ),
    ];
    let err = ControlError::new(0.02, 0.05);
    for (name, spec) in cases {
        let program = expand_sequence(&spec).unwrap();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| cycle_propagator(black_box(&program), black_box(&err), None).unwrap())
        });
    }
    group.finish();
}

fn bench_fidelity_map(c: &mut Criterion) {
    let spec = SequenceSpec::new(Family::Xy4, TAU_D, T_P);
    let axis = symmetric_axis(0.2, 21);
    c.bench_function("fidelity_map_21x21_xy4", |b| {
        b.iter(|| fidelity_map(black_box(&spec), &axis, &axis, 100).unwrap())
    });
}

fn bench_noise(c: &mut Criterion) {
    let process = NoiseProcess::new(100.0, 0.05, 5.0, 7).unwrap();
    c.bench_function("ou_trajectory_10k_steps", |b| {
        b.iter(|| ou_trajectory(black_box(&process), 50_000.0, 3).unwrap())
    });
}

fn bench_ensemble(c: &mut Criterion) {
    let program = expand_sequence(&SequenceSpec::new(Family::Xy4, TAU_D, T_P)).unwrap();
    let ensemble = GaussianEnsemble::new(0.02, 8, 11).unwrap();
    let bath = NoiseProcess::new(100.0, 0.05, 10.0, 11).unwrap();
    c.bench_function("ensemble_average_64x50cycles", |b| {
        b.iter(|| {
            ensemble_average(
                black_box(&program),
                50,
                InitialState::Y,
                Sampling::Cycle,
                &ensemble,
                &bath,
                8,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_cycle_propagator,
    bench_fidelity_map,
    bench_noise,
    bench_ensemble
);
criterion_main!(benches);
