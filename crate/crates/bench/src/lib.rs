//! Shared fixtures for the criterion benches.

use flowforge::engine::DEFAULT_PARTITIONS;
use flowforge::flowdata::generate_synthetic;
use flowforge::{partition, ExecutorConfig, PartitionedTable};

pub const WORKER_COUNTS: [usize; 3] = [1, 2, 4];

/// Synthetic flows with the usual Bot share, split into the default partition count.
pub fn synthetic_table(rows: usize, noise_features: usize, seed: u64) -> PartitionedTable {
    let (records, _) = generate_synthetic(rows, noise_features, 0.273, seed).expect("synthetic rows");
    partition(records, DEFAULT_PARTITIONS).expect("partitioned table")
}

pub fn executor(workers: usize) -> ExecutorConfig {
    ExecutorConfig::new(workers, DEFAULT_PARTITIONS, 0).expect("executor config")
}
