use std::time::Duration;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use pdxprop::continuum::{edge_samples, transfer_samples, Query};
use pdxprop::lattice::{
    below_time_histogram, crossing_histogram, lattice_density_bruteforce_with, LatticeSpec, WeightModel,
};
use pdxprop::pdx::{verify_delta_full, VerifyOptions};
use pdxprop::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumeration");
    group.sample_size(10).measurement_time(Duration::from_secs(5));
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("below_time_histogram", name), &exec, |b, &exec| {
            b.iter(|| below_time_histogram(black_box(11), exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("crossing_histogram", name), &exec, |b, &exec| {
            b.iter(|| crossing_histogram(black_box(11), exec).unwrap())
        });
        let spec = LatticeSpec::from_time(11, 1.0, 1.0).unwrap();
        let model = WeightModel::Delta { coupling: 1.0 };
        group.bench_with_input(BenchmarkId::new("bruteforce_density", name), &exec, |b, &exec| {
            b.iter(|| lattice_density_bruteforce_with(model, black_box(&spec), exec, 12).unwrap())
        });
    }
    group.finish();
}

fn sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweeps");
    group.sample_size(10).measurement_time(Duration::from_secs(5));
    let ns: Vec<u64> = (1..=16).map(|k| 10_000 * k).collect();
    let q = Query::new(1.0, -1.0, 1.0, 1.0).unwrap();
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("delta_edge_samples", name), &exec, |b, &exec| {
            b.iter(|| edge_samples(WeightModel::Delta { coupling: 1.0 }, 1.0, 1.0, black_box(&ns), exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("step_transfer_samples", name), &exec, |b, &exec| {
            b.iter(|| {
                transfer_samples(
                    black_box(&q),
                    WeightModel::Step { potential: 1.0 },
                    0.5,
                    &[8, 12, 16, 20, 24, 28, 32],
                    exec,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn verification(c: &mut Criterion) {
    let mut group = c.benchmark_group("verification");
    group.sample_size(10).measurement_time(Duration::from_secs(5));
    let queries: Vec<Query> = [(-1.0, 1.0), (1.0, 1.0), (-0.5, -2.0), (2.0, -0.5)]
        .iter()
        .map(|&(a, b)| Query::new(a, b, 1.0, 1.0).unwrap())
        .collect();
    for (name, exec) in MODES {
        let opts = VerifyOptions {
            exec,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::new("delta_assembly", name), &opts, |b, opts| {
            b.iter(|| verify_delta_full(black_box(&queries), 1.0, opts))
        });
    }
    group.finish();
}

criterion_group!(benches, enumeration, sweeps, verification);
criterion_main!(benches);
