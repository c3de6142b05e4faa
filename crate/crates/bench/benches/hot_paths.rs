use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use knnq_bench::benchmark_learning_set;
use knnq_core::knn::{
    compute_weights, default_quantile_grid, empirical_quantile, pairwise_neighbors,
    transform_targets, VARIANCE_EPSILON,
};
use knnq_core::regression::{expand, fit_sequential, PolynomialSpec};

fn bench_neighbors(c: &mut Criterion) {
    let set = benchmark_learning_set(120);
    let weights = compute_weights(&set.x.view(), VARIANCE_EPSILON).unwrap();
    let mut group = c.benchmark_group("pairwise_neighbors");
    group.sample_size(10);
    for &k in &[50usize, 120] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| pairwise_neighbors(&set.x.view(), &weights, black_box(k)).unwrap());
        });
    }
    group.finish();
}

fn bench_transform(c: &mut Criterion) {
    let set = benchmark_learning_set(120);
    let weights = compute_weights(&set.x.view(), VARIANCE_EPSILON).unwrap();
    let table = pairwise_neighbors(&set.x.view(), &weights, 120).unwrap();
    let grid = default_quantile_grid();
    c.bench_function("transform_targets", |b| {
        b.iter(|| transform_targets(black_box(&set.y), &table, &grid).unwrap());
    });
}

fn bench_fit(c: &mut Criterion) {
    let set = benchmark_learning_set(120);
    let weights = compute_weights(&set.x.view(), VARIANCE_EPSILON).unwrap();
    let table = pairwise_neighbors(&set.x.view(), &weights, 100).unwrap();
    let grid = default_quantile_grid();
    let targets = transform_targets(&set.y, &table, &grid).unwrap();
    let mut group = c.benchmark_group("fit_sequential");
    group.sample_size(10);
    for degree in 1..=3usize {
        let design = expand(&set.x.view(), &PolynomialSpec::new(degree).unwrap());
        group.bench_with_input(
            BenchmarkId::from_parameter(degree),
            &degree,
            |b, _| {
                b.iter(|| fit_sequential(black_box(&design.view()), &targets).unwrap());
            },
        );
    }
    group.finish();
}

fn bench_quantile(c: &mut Criterion) {
    let sorted: Vec<f64> = (0..120).map(|i| i as f64 / 120.0).collect();
    let grid = default_quantile_grid();
    c.bench_function("empirical_quantile_grid", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for &q in &grid {
                acc += empirical_quantile(black_box(&sorted), q).unwrap();
            }
            acc
        });
    });
}

criterion_group!(
    benches,
    bench_neighbors,
    bench_transform,
    bench_fit,
    bench_quantile
);
criterion_main!(benches);
