use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use radpair::parallel::Execution;
use radpair::verify::{random_battery, run_suite_with};
use radpair::{integrate, random_density_matrix, Method, ModelKind, RateParams, SpinSpace, TimeGrid, Tolerances};

fn suite(c: &mut Criterion) {
    let battery = random_battery(16, 1000);
    let mut group = c.benchmark_group("verify-suite");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let label = format!("{exec:?}").to_lowercase();
        group.bench_with_input(BenchmarkId::from_parameter(label), &exec, |b, &exec| {
            b.iter(|| run_suite_with(black_box(&battery), exec))
        });
    }
    group.finish();
}

fn single_integration(c: &mut Criterion) {
    let rho = random_density_matrix(Arc::new(SpinSpace::electron_pair()), 1);
    let params = RateParams::new(1.0).unwrap();
    let grid = TimeGrid::uniform(10.0, 101).unwrap();
    let tol = Tolerances::default();
    let mut group = c.benchmark_group("integrate-normalized-jh");
    for method in [Method::rk4(1e-3), Method::adaptive()] {
        group.bench_function(method.name(), |b| {
            b.iter(|| {
                integrate(
                    ModelKind::NormalizedJonesHore,
                    black_box(&rho),
                    &params,
                    &grid,
                    method,
                    &tol,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, suite, single_integration);
criterion_main!(benches);
