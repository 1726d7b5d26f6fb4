use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use flowforge::{fit_model, Algorithm, TrainParams};
use flowforge_bench::{executor, synthetic_table};

fn fits(c: &mut Criterion) {
    let table = synthetic_table(50_000, 0, 11);
    let mut params = TrainParams::default();
    params.gd.max_iterations = 20;
    params.gbt_stages = 10;
    params.forest.n_trees = 5;

    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    for algorithm in [
        Algorithm::NaiveBayes,
        Algorithm::LogReg,
        Algorithm::Tree,
        Algorithm::Gbt,
    ] {
        for workers in [1, 4] {
            let exec = executor(workers);
            group.bench_with_input(BenchmarkId::new(algorithm.name(), workers), &exec, |b, exec| {
                b.iter(|| black_box(fit_model(algorithm, &params, &table, exec).expect("fit")))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, fits);
criterion_main!(benches);
