use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qmimo::experiments::{mc_verify_with, region_scan_with, GridSpec};
use qmimo::mimo::{simulate_2x2_mux_with, trajectory_estimate_with};
use qmimo::tensor::haar_state;
use qmimo::{ChannelParams, Execution, MimoConfig, Rng};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn region(c: &mut Criterion) {
    let mut group = c.benchmark_group("region_scan");
    let grid = GridSpec::standard(100);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "100^3"), |b| {
            b.iter(|| region_scan_with(black_box(&grid), exec).unwrap())
        });
    }
    group.finish();
}

fn trajectory(c: &mut Criterion) {
    let mut group = c.benchmark_group("trajectory_estimate");
    let cfg = MimoConfig::geometric(7, 3, 0.1, 0.1, 0.4, 1.2, false).unwrap();
    let rng = Rng::new(42, 0);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "m7_x3_1e5"), |b| {
            b.iter(|| trajectory_estimate_with(black_box(&cfg), 100_000, &rng, exec).unwrap())
        });
    }
    group.finish();
}

fn density_mux(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_2x2_mux");
    let rng = Rng::new(42, 0);
    let psi = haar_state(2, &mut rng.child(0)).unwrap();
    let p = ChannelParams::new(0.3, 0.2, 0.1).unwrap();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "200_samples"), |b| {
            b.iter(|| simulate_2x2_mux_with(&psi, black_box(&p), 200, &rng, exec).unwrap())
        });
    }
    group.finish();
}

fn sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("mc_verify");
    group.sample_size(10);
    let rng = Rng::new(42, 0);
    let base = ChannelParams::new(0.2, 0.2, 0.2).unwrap();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "n200"), |b| {
            b.iter(|| mc_verify_with(black_box(&base), 200, &rng, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, region, trajectory, density_mux, sweeps);
criterion_main!(benches);
