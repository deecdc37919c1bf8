use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rssiloc_bench::{grid_points, ring_system, survey};
use rssiloc_core::cluster::kmeans;
use rssiloc_core::lateration::solve_svd;
use rssiloc_core::simulator::run_baseline_svd;
use rssiloc_core::Estimator;

fn bench_kmeans(c: &mut Criterion) {
    let mut group = c.benchmark_group("kmeans");
    for (n, k) in [(200, 4), (875, 16)] {
        let pts = grid_points(n);
        group.bench_with_input(BenchmarkId::from_parameter(format!("n{n}_k{k}")), &pts, |b, pts| {
            b.iter(|| kmeans(black_box(pts), k, 3).unwrap())
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_svd");
    for m in [8, 64, 875] {
        let sys = ring_system(m);
        group.bench_with_input(BenchmarkId::from_parameter(m), &sys, |b, sys| {
            b.iter(|| solve_svd(black_box(sys)).unwrap())
        });
    }
    group.finish();
}

fn bench_survey(c: &mut Criterion) {
    let (obs, cfg) = survey(1);
    let mut group = c.benchmark_group("survey");
    group.sample_size(20);
    group.bench_function("estimator", |b| {
        b.iter(|| Estimator::run(cfg, black_box(&obs)).unwrap())
    });
    group.bench_function("baseline", |b| {
        b.iter(|| run_baseline_svd(black_box(&obs), &cfg.cal, obs[0].pos).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_kmeans, bench_solve, bench_survey);
criterion_main!(benches);
