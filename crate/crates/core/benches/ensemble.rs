//! Parallel vs sequential throughput for ensemble simulation and the
//! density-process pipeline.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use girsanov_lab::girsanov::density_process;
use girsanov_lab::scenarios;
use girsanov_lab::sde::{simulate_ensemble_seq, TimeGrid};
use girsanov_lab::verify::refinement_study;
use std::hint::black_box;

fn bench_ensemble(c: &mut Criterion) {
    let scen = scenarios::linear_default();
    let grid = TimeGrid::from_dt(1.0, 1e-3).unwrap();
    let n_paths = 256;

    let mut group = c.benchmark_group("simulate_ensemble");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", n_paths), |b| {
        b.iter(|| {
            black_box(simulate_ensemble_seq(&scen.fb, &scen.x0, &grid, 42, n_paths));
        })
    });
    #[cfg(feature = "parallel")]
    group.bench_function(BenchmarkId::new("rayon", n_paths), |b| {
        b.iter(|| {
            black_box(girsanov_lab::sde::simulate_ensemble(
                &scen.fb, &scen.x0, &grid, 42, n_paths,
            ));
        })
    });
    group.finish();
}

fn bench_density(c: &mut Criterion) {
    let scen = scenarios::linear_default();
    let grid = TimeGrid::from_dt(1.0, 1e-3).unwrap();
    let ens = simulate_ensemble_seq(&scen.fb, &scen.x0, &grid, 42, 64);

    c.bench_function("density_process_64_paths", |b| {
        b.iter(|| {
            for (_, p) in &ens.paths {
                black_box(density_process(&scen.fb, p).unwrap());
            }
        })
    });
}

fn bench_refinement(c: &mut Criterion) {
    let scen = scenarios::bridge(1, 1.0, 2.0);
    let mut group = c.benchmark_group("refinement_study");
    group.sample_size(10);
    group.bench_function("bridge_3_levels_100_paths", |b| {
        b.iter(|| {
            black_box(
                refinement_study(
                    &scen.fb,
                    &scen.candidate,
                    &scen.x0,
                    1.0,
                    &[1e-2, 5e-3, 2.5e-3],
                    100,
                    42,
                )
                .unwrap(),
            );
        })
    });
    group.finish();
}

criterion_group!(benches, bench_ensemble, bench_density, bench_refinement);
criterion_main!(benches);
