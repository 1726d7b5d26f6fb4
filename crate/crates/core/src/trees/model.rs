use crate::error::{Error, Result};
use crate::linear::{sigmoid, SigmoidParams};

use super::ImpurityKind;

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Class counts, or `(n, sum, sum_sq)` for regression trees.
        stats: Vec<f64>,
    },
    Leaf {
        value: f64,
        stats: Vec<f64>,
    },
}

impl TreeNode {
    pub fn stats(&self) -> &[f64] {
        match self {
            TreeNode::Split { stats, .. } | TreeNode::Leaf { stats, .. } => stats,
        }
    }
}

/// Binary tree stored as an arena; node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
    pub max_depth_used: usize,
    pub impurity: ImpurityKind,
    pub feature_count: usize,
}

impl TreeModel {
    pub fn leaf(value: f64, stats: Vec<f64>, impurity: ImpurityKind, feature_count: usize) -> Self {
        Self {
            nodes: vec![TreeNode::Leaf { value, stats }],
            max_depth_used: 0,
            impurity,
            feature_count,
        }
    }

    fn check(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.feature_count {
            return Err(Error::DimensionMismatch {
                expected: self.feature_count,
                actual: features.len(),
            });
        }
        Ok(())
    }

    /// Leaf value reached by `features`; `value <= threshold` descends left.
    pub fn value(&self, features: &[f64]) -> Result<f64> {
        self.check(features)?;
        Ok(self.value_unchecked(features))
    }

    pub(crate) fn value_unchecked(&self, features: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if features[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                TreeNode::Leaf { value, .. } => return *value,
            }
        }
    }

    pub fn predict(&self, features: &[f64]) -> Result<u8> {
        Ok(u8::from(self.value(features)? >= 0.5))
    }

    pub fn split_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Split { .. }))
            .count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
}

impl ForestModel {
    pub fn feature_count(&self) -> usize {
        self.trees.first().map_or(0, |t| t.feature_count)
    }

    /// Count of trees voting Bot.
    pub fn votes(&self, features: &[f64]) -> Result<usize> {
        self.trees
            .iter()
            .try_fold(0, |acc, t| Ok(acc + usize::from(t.predict(features)?)))
    }

    /// Majority vote; a tie is Benign.
    pub fn predict(&self, features: &[f64]) -> Result<u8> {
        let votes = self.votes(features)?;
        Ok(u8::from(2 * votes > self.trees.len()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GbtModel {
    /// Log-odds of the training class ratio.
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<TreeModel>,
}

impl GbtModel {
    pub fn feature_count(&self) -> usize {
        self.trees.first().map_or(0, |t| t.feature_count)
    }

    /// Additive score `F(x)`.
    pub fn score(&self, features: &[f64]) -> Result<f64> {
        if let Some(t) = self.trees.first() {
            t.check(features)?;
        }
        Ok(self.score_unchecked(features))
    }

    pub(crate) fn score_unchecked(&self, features: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(self.init, |f, t| f + self.learning_rate * t.value_unchecked(features))
    }

    pub fn probability(&self, features: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.score(features)?, SigmoidParams::STANDARD))
    }

    pub fn predict(&self, features: &[f64]) -> Result<(u8, f64)> {
        let p = self.probability(features)?;
        Ok((u8::from(p >= 0.5), p))
    }
}
