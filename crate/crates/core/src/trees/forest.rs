use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::engine::{self, ExecutorConfig, PartitionedTable};
use crate::error::{Error, Result};

use super::grow::{grow, BinnedTable, GrowInputs};
use super::{check_table, ClassHistogram, ForestModel, ImpurityKind, TreeConfig};

pub const DEFAULT_TREES: usize = 20;

const WEIGHT_STREAM: u64 = 0x5745_4947_4854_5321;
const FEATURE_STREAM: u64 = 0x4645_4154_5552_4553;

#[derive(Clone, Debug, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features considered at each node; `None` means `ceil(sqrt(d))`.
    pub feature_subset_size: Option<usize>,
    /// Poisson(1) bootstrap weights; when off every row has weight 1.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: DEFAULT_TREES,
            feature_subset_size: None,
            bootstrap: true,
        }
    }
}

pub fn default_subset_size(d: usize) -> usize {
    (d as f64).sqrt().ceil().max(1.0) as usize
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_seed(stream: u64, seed: u64, a: usize, b: usize) -> u64 {
    splitmix(splitmix(splitmix(stream ^ seed) ^ a as u64) ^ b as u64)
}

/// Bagged forest with `n_trees` trees and bootstrap on.
pub fn fit_random_forest(
    table: &PartitionedTable,
    cfg: &TreeConfig,
    n_trees: usize,
    feature_subset_size: usize,
    exec: &ExecutorConfig,
) -> Result<ForestModel> {
    let params = ForestParams {
        n_trees,
        feature_subset_size: Some(feature_subset_size),
        bootstrap: true,
    };
    fit_forest(table, cfg, &params, exec)
}

/// Trains trees one after another. Tree `t` draws its row weights from a
/// stream keyed by `(seed, t, partition)` and its per-node feature subsets
/// from a stream keyed by `(seed, t, node)`, so the result depends on the
/// partition layout but not on the worker count.
pub fn fit_forest(
    table: &PartitionedTable,
    cfg: &TreeConfig,
    params: &ForestParams,
    exec: &ExecutorConfig,
) -> Result<ForestModel> {
    cfg.validate()?;
    check_table(table)?;
    if params.n_trees == 0 {
        return Err(Error::InvalidConfig("a forest needs at least one tree".into()));
    }
    if cfg.impurity == ImpurityKind::Variance {
        return Err(Error::InvalidConfig(
            "classification trees need gini or entropy impurity".into(),
        ));
    }
    let d = table.feature_count();
    let subset = params.feature_subset_size.unwrap_or_else(|| default_subset_size(d));
    if subset == 0 {
        return Err(Error::InvalidConfig("feature_subset_size must be at least 1".into()));
    }
    let subset = subset.min(d);
    let binned = BinnedTable::build(table, cfg.max_bins, exec);
    let poisson = Poisson::new(1.0).expect("unit rate is valid");
    let all: Vec<usize> = (0..d).collect();

    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let weights = params.bootstrap.then(|| {
            engine::map_partitions(table, exec, |k, rows| {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(WEIGHT_STREAM, cfg.seed, t, k));
                rows.iter()
                    .map(|_| poisson.sample(&mut rng) as u32)
                    .collect::<Vec<u32>>()
            })
        });
        let inputs = GrowInputs {
            table,
            binned: &binned,
            weights: weights.as_deref(),
            targets: None,
        };
        let features_for = |node: usize| {
            if subset >= d {
                return all.clone();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(FEATURE_STREAM, cfg.seed, t, node));
            let mut picked = rand::seq::index::sample(&mut rng, d, subset).into_vec();
            picked.sort_unstable();
            picked
        };
        trees.push(grow::<ClassHistogram, _>(&inputs, cfg, exec, features_for)?);
    }
    Ok(ForestModel { trees })
}
