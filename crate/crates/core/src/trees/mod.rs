//! Binned decision trees: single tree, random forest, gradient boosting.

mod bins;
mod forest;
mod gbt;
mod grow;
mod impurity;
mod model;
mod split;

pub use bins::{bin_index, compute_bins, SAMPLE_ROWS_PER_BIN};
pub use forest::{fit_forest, fit_random_forest, ForestParams, DEFAULT_TREES};
pub use gbt::{fit_gbt, DEFAULT_LEARNING_RATE, DEFAULT_STAGES};
pub use impurity::{entropy, gini, variance_impurity, ClassHistogram, ImpurityKind, LabelHistogram, MomentHistogram};
pub use model::{ForestModel, GbtModel, TreeModel, TreeNode};
pub use split::{best_split, SplitCandidate};

use crate::engine::{ExecutorConfig, PartitionedTable};
use crate::error::{Error, Result};

use grow::{grow, BinnedTable, GrowInputs};

#[derive(Clone, Debug, PartialEq)]
pub struct TreeConfig {
    /// Root is depth 0; nodes at `max_depth` are leaves.
    pub max_depth: usize,
    pub max_bins: usize,
    pub impurity: ImpurityKind,
    pub min_info_gain: f64,
    pub min_rows_per_node: usize,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 7,
            max_bins: 32,
            impurity: ImpurityKind::Gini,
            min_info_gain: 0.0,
            min_rows_per_node: 1,
            seed: 0,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=usize::from(u16::MAX) + 1).contains(&self.max_bins) {
            return Err(Error::InvalidConfig(format!(
                "max_bins must be in 2..=65536, got {}",
                self.max_bins
            )));
        }
        if !(self.min_info_gain >= 0.0 && self.min_info_gain.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "min_info_gain must be non-negative, got {}",
                self.min_info_gain
            )));
        }
        Ok(())
    }
}

fn check_table(table: &PartitionedTable) -> Result<()> {
    if table.total_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

/// Fits a classification tree (gini or entropy).
pub fn fit_tree(table: &PartitionedTable, cfg: &TreeConfig, exec: &ExecutorConfig) -> Result<TreeModel> {
    cfg.validate()?;
    check_table(table)?;
    if cfg.impurity == ImpurityKind::Variance {
        return Err(Error::InvalidConfig(
            "classification trees need gini or entropy impurity".into(),
        ));
    }
    let binned = BinnedTable::build(table, cfg.max_bins, exec);
    let all: Vec<usize> = (0..table.feature_count()).collect();
    let inputs = GrowInputs {
        table,
        binned: &binned,
        weights: None,
        targets: None,
    };
    grow::<ClassHistogram, _>(&inputs, cfg, exec, |_| all.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::partition;
    use crate::flowdata::LabeledRecord;

    fn table(rows: &[(f64, u8)], p: usize) -> PartitionedTable {
        partition(rows.iter().map(|&(x, y)| LabeledRecord::new(vec![x], y)).collect(), p).unwrap()
    }

    #[test]
    fn one_split_on_two_points() {
        let t = fit_tree(
            &table(&[(0.0, 0), (1.0, 1)], 2),
            &TreeConfig {
                max_depth: 1,
                ..TreeConfig::default()
            },
            &ExecutorConfig::default(),
        )
        .unwrap();
        assert_eq!(t.split_count(), 1);
        match &t.nodes[0] {
            TreeNode::Split { threshold, .. } => assert_eq!(*threshold, 0.5),
            other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(t.predict(&[0.0]).unwrap(), 0);
        assert_eq!(t.predict(&[1.0]).unwrap(), 1);
        assert_eq!(t.max_depth_used, 1);
    }

    #[test]
    fn single_class_is_a_leaf() {
        let t = fit_tree(
            &table(&[(0.0, 1), (3.0, 1)], 1),
            &TreeConfig::default(),
            &ExecutorConfig::default(),
        )
        .unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&[9.0]).unwrap(), 1);
    }

    #[test]
    fn depth_zero_is_majority() {
        let cfg = TreeConfig {
            max_depth: 0,
            ..TreeConfig::default()
        };
        let t = fit_tree(
            &table(&[(0.0, 0), (1.0, 1), (2.0, 1)], 2),
            &cfg,
            &ExecutorConfig::default(),
        )
        .unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&[0.0]).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_config() {
        let t = table(&[(0.0, 0), (1.0, 1)], 1);
        let cfg = TreeConfig {
            max_bins: 1,
            ..TreeConfig::default()
        };
        assert!(matches!(
            fit_tree(&t, &cfg, &ExecutorConfig::default()),
            Err(Error::InvalidConfig(_))
        ));
        let cfg = TreeConfig {
            impurity: ImpurityKind::Variance,
            ..TreeConfig::default()
        };
        assert!(matches!(
            fit_tree(&t, &cfg, &ExecutorConfig::default()),
            Err(Error::InvalidConfig(_))
        ));
    }
}
