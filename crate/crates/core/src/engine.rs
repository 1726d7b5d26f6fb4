//! In-process mini-cluster: a row-partitioned immutable table and a worker
//! pool that maps over partitions and reduces their results along a fixed
//! combine tree.
//!
//! Results never depend on the worker count. Partitions are handed out in
//! ascending index order, each partial result is stored at its partition
//! index, and reductions always combine neighbours pairwise,
//! `((a0, a1), (a2, a3))`, regardless of which worker finished first.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::flowdata::LabeledRecord;

pub const DEFAULT_PARTITIONS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExecutorConfig {
    pub worker_count: usize,
    pub partition_count: usize,
    pub seed: u64,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        Self {
            worker_count: 1,
            partition_count: DEFAULT_PARTITIONS,
            seed: 0,
        }
    }
}

impl ExecutorConfig {
    pub fn new(worker_count: usize, partition_count: usize, seed: u64) -> Result<Self> {
        if worker_count == 0 {
            return Err(Error::InvalidConfig("worker_count must be at least 1".into()));
        }
        if partition_count == 0 {
            return Err(Error::InvalidConfig("partition_count must be at least 1".into()));
        }
        Ok(Self {
            worker_count,
            partition_count,
            seed,
        })
    }

    pub fn with_workers(self, worker_count: usize) -> Self {
        Self {
            worker_count: worker_count.max(1),
            ..self
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Immutable row-partitioned collection of records.
#[derive(Debug)]
pub struct PartitionedTable {
    partitions: Vec<Vec<LabeledRecord>>,
    total_rows: usize,
    feature_count: usize,
    passes: AtomicUsize,
}

impl Clone for PartitionedTable {
    fn clone(&self) -> Self {
        Self {
            partitions: self.partitions.clone(),
            total_rows: self.total_rows,
            feature_count: self.feature_count,
            passes: AtomicUsize::new(0),
        }
    }
}

impl PartialEq for PartitionedTable {
    fn eq(&self, other: &Self) -> bool {
        self.partitions == other.partitions
    }
}

/// Round-robin partitioning: row `i` lands in partition `i % partition_count`.
pub fn partition(records: Vec<LabeledRecord>, partition_count: usize) -> Result<PartitionedTable> {
    if partition_count == 0 {
        return Err(Error::InvalidConfig("partition_count must be at least 1".into()));
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let per = records.len().div_ceil(partition_count);
    let mut partitions: Vec<Vec<LabeledRecord>> = (0..partition_count).map(|_| Vec::with_capacity(per)).collect();
    for (i, r) in records.into_iter().enumerate() {
        partitions[i % partition_count].push(r);
    }
    PartitionedTable::from_partitions(partitions)
}

impl PartitionedTable {
    /// Builds a table from explicit blocks. Every record must have the same
    /// feature count.
    pub fn from_partitions(partitions: Vec<Vec<LabeledRecord>>) -> Result<Self> {
        if partitions.is_empty() {
            return Err(Error::InvalidConfig("a table needs at least one partition".into()));
        }
        let total_rows = partitions.iter().map(Vec::len).sum();
        if total_rows == 0 {
            return Err(Error::EmptyDataset);
        }
        let feature_count = partitions.iter().flatten().next().map_or(0, |r| r.features.len());
        if let Some(bad) = partitions.iter().flatten().find(|r| r.features.len() != feature_count) {
            return Err(Error::DimensionMismatch {
                expected: feature_count,
                actual: bad.features.len(),
            });
        }
        Ok(Self {
            partitions,
            total_rows,
            feature_count,
            passes: AtomicUsize::new(0),
        })
    }

    pub fn partitions(&self) -> &[Vec<LabeledRecord>] {
        &self.partitions
    }

    pub fn partition_count(&self) -> usize {
        self.partitions.len()
    }

    pub fn partition_sizes(&self) -> Vec<usize> {
        self.partitions.iter().map(Vec::len).collect()
    }

    pub fn total_rows(&self) -> usize {
        self.total_rows
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    /// Number of full passes executed over this table since construction.
    pub fn pass_count(&self) -> usize {
        self.passes.load(Ordering::Relaxed)
    }

    /// Rows in partition-major order.
    pub fn rows(&self) -> impl Iterator<Item = &LabeledRecord> {
        self.partitions.iter().flatten()
    }

    /// Rows in their pre-partitioning order, assuming round-robin layout.
    pub fn to_records(&self) -> Vec<LabeledRecord> {
        let p = self.partitions.len();
        (0..self.total_rows)
            .map(|i| self.partitions[i % p][i / p].clone())
            .collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0usize; 2];
        for r in self.rows() {
            counts[usize::from(r.label.min(1))] += 1;
        }
        counts
    }

    /// New table keeping only the given feature columns, in order, with the
    /// same partition layout.
    pub fn project(&self, columns: &[usize]) -> Result<PartitionedTable> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.feature_count) {
            return Err(Error::DimensionMismatch {
                expected: self.feature_count,
                actual: bad + 1,
            });
        }
        let partitions = self
            .partitions
            .iter()
            .map(|part| {
                part.iter()
                    .map(|r| LabeledRecord {
                        features: columns.iter().map(|&c| r.features[c]).collect(),
                        label: r.label,
                    })
                    .collect()
            })
            .collect();
        let mut table = PartitionedTable::from_partitions(partitions)?;
        table.feature_count = columns.len();
        Ok(table)
    }
}

/// Runs `task(i)` for `i in 0..n` on at most `workers` threads and returns the
/// results in index order. Indices are claimed in ascending order.
pub fn run_tasks<R, F>(n: usize, workers: usize, task: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    let workers = workers.max(1).min(n);
    if workers <= 1 {
        return (0..n).map(task).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = task(i);
                *slots[i].lock().expect("result slot poisoned") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("result slot poisoned")
                .expect("task produced no result")
        })
        .collect()
}

/// Applies `f(partition_index, rows)` to every partition. Output index `k`
/// holds the result for partition `k`.
pub fn map_partitions<R, F>(table: &PartitionedTable, cfg: &ExecutorConfig, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, &[LabeledRecord]) -> R + Sync,
{
    table.passes.fetch_add(1, Ordering::Relaxed);
    run_tasks(table.partitions.len(), cfg.worker_count, |k| f(k, &table.partitions[k]))
}

/// Fallible [`map_partitions`]; every partition runs, and the error of the
/// lowest failing partition index is returned.
pub fn try_map_partitions<R, E, F>(table: &PartitionedTable, cfg: &ExecutorConfig, f: F) -> Result<Vec<R>, E>
where
    R: Send,
    E: Send,
    F: Fn(usize, &[LabeledRecord]) -> Result<R, E> + Sync,
{
    map_partitions(table, cfg, f).into_iter().collect()
}

/// Combines `parts` pairwise, level by level: `[a0, a1, a2, a3]` becomes
/// `comb(comb(a0, a1), comb(a2, a3))`. An odd tail is carried up unchanged.
pub fn combine_tree<A, C>(mut parts: Vec<A>, comb: C) -> Option<A>
where
    C: Fn(A, A) -> A,
{
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(left) = it.next() {
            match it.next() {
                Some(right) => next.push(comb(left, right)),
                None => next.push(left),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Folds each partition in row order with `seq` starting from `zero`, then
/// merges the partials with [`combine_tree`]. The result is a pure function
/// of the table layout and the three arguments.
pub fn tree_aggregate<A, S, C>(table: &PartitionedTable, cfg: &ExecutorConfig, zero: A, seq: S, comb: C) -> A
where
    A: Clone + Send + Sync,
    S: Fn(A, &LabeledRecord) -> A + Sync,
    C: Fn(A, A) -> A,
{
    let partials = map_partitions(table, cfg, |_, rows| rows.iter().fold(zero.clone(), &seq));
    combine_tree(partials, comb).unwrap_or(zero)
}

/// Fallible [`tree_aggregate`].
pub fn try_tree_aggregate<A, E, S, C>(
    table: &PartitionedTable,
    cfg: &ExecutorConfig,
    zero: A,
    seq: S,
    comb: C,
) -> Result<A, E>
where
    A: Clone + Send + Sync,
    E: Send,
    S: Fn(A, &LabeledRecord) -> Result<A, E> + Sync,
    C: Fn(A, A) -> A,
{
    let partials = try_map_partitions(table, cfg, |_, rows| rows.iter().try_fold(zero.clone(), &seq))?;
    Ok(combine_tree(partials, comb).unwrap_or(zero))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimedResult<T> {
    pub value: T,
    pub wall_seconds: f64,
}

pub fn timed<T>(action: impl FnOnce() -> T) -> TimedResult<T> {
    let start = Instant::now();
    let value = action();
    TimedResult {
        value,
        wall_seconds: start.elapsed().as_secs_f64(),
    }
}
