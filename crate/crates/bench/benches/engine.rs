use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use flowforge::engine::{map_partitions, tree_aggregate};
use flowforge_bench::{executor, synthetic_table, WORKER_COUNTS};

fn column_sums(c: &mut Criterion) {
    let table = synthetic_table(200_000, 0, 7);
    let mut group = c.benchmark_group("tree_aggregate");
    group.throughput(Throughput::Elements(table.total_rows() as u64));
    for workers in WORKER_COUNTS {
        let exec = executor(workers);
        group.bench_with_input(BenchmarkId::from_parameter(workers), &exec, |b, exec| {
            b.iter(|| {
                let sums = tree_aggregate(
                    &table,
                    exec,
                    [0.0f64; 4],
                    |mut acc, r| {
                        for (a, x) in acc.iter_mut().zip(&r.features) {
                            *a += x;
                        }
                        acc
                    },
                    |a, b| std::array::from_fn(|j| a[j] + b[j]),
                );
                black_box(sums)
            })
        });
    }
    group.finish();
}

fn bot_counts(c: &mut Criterion) {
    let table = synthetic_table(200_000, 0, 7);
    let mut group = c.benchmark_group("map_partitions");
    for workers in WORKER_COUNTS {
        let exec = executor(workers);
        group.bench_with_input(BenchmarkId::from_parameter(workers), &exec, |b, exec| {
            b.iter(|| {
                black_box(map_partitions(&table, exec, |_, rows| {
                    rows.iter().filter(|r| r.label == 1).count()
                }))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, column_sums, bot_counts);
criterion_main!(benches);
