use std::fmt;
use std::str::FromStr;

use crate::bayes::{fit_naive_bayes, NaiveBayesVariant, DEFAULT_BINARIZE_THRESHOLD, DEFAULT_SMOOTHING};
use crate::engine::{ExecutorConfig, PartitionedTable};
use crate::error::{Error, Result};
use crate::linear::{fit_logistic, fit_svm, GdConfig};
use crate::model::Model;
use crate::trees::{fit_forest, fit_gbt, fit_tree, ForestParams, TreeConfig, DEFAULT_LEARNING_RATE, DEFAULT_STAGES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    LogReg,
    Svm,
    NaiveBayes,
    Tree,
    Forest,
    Gbt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::LogReg,
        Algorithm::Svm,
        Algorithm::NaiveBayes,
        Algorithm::Tree,
        Algorithm::Forest,
        Algorithm::Gbt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::LogReg => "logreg",
            Algorithm::Svm => "svm",
            Algorithm::NaiveBayes => "nb",
            Algorithm::Tree => "tree",
            Algorithm::Forest => "forest",
            Algorithm::Gbt => "gbt",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let valid: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
            Error::InvalidConfig(format!(
                "unknown algorithm `{s}` (expected one of {})",
                valid.join(", ")
            ))
        })
    }
}

/// Hyperparameters for every algorithm; each fit reads only its own fields.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainParams {
    pub gd: GdConfig,
    pub nb_variant: NaiveBayesVariant,
    pub smoothing: f64,
    pub binarize_threshold: f64,
    pub tree: TreeConfig,
    pub forest: ForestParams,
    pub gbt_stages: usize,
    pub gbt_learning_rate: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            gd: GdConfig::default(),
            nb_variant: NaiveBayesVariant::Bernoulli,
            smoothing: DEFAULT_SMOOTHING,
            binarize_threshold: DEFAULT_BINARIZE_THRESHOLD,
            tree: TreeConfig::default(),
            forest: ForestParams::default(),
            gbt_stages: DEFAULT_STAGES,
            gbt_learning_rate: DEFAULT_LEARNING_RATE,
        }
    }
}

pub fn fit_model(
    algorithm: Algorithm,
    params: &TrainParams,
    table: &PartitionedTable,
    exec: &ExecutorConfig,
) -> Result<Model> {
    Ok(match algorithm {
        Algorithm::LogReg => Model::Linear(fit_logistic(table, &params.gd, exec)?),
        Algorithm::Svm => Model::Linear(fit_svm(table, &params.gd, exec)?),
        Algorithm::NaiveBayes => Model::NaiveBayes(fit_naive_bayes(
            table,
            params.nb_variant,
            params.smoothing,
            params.binarize_threshold,
            exec,
        )?),
        Algorithm::Tree => Model::Tree(fit_tree(table, &params.tree, exec)?),
        Algorithm::Forest => Model::Forest(fit_forest(table, &params.tree, &params.forest, exec)?),
        Algorithm::Gbt => Model::Gbt(fit_gbt(
            table,
            &params.tree,
            params.gbt_stages,
            params.gbt_learning_rate,
            exec,
        )?),
    })
}

/// Something that can be trained on a table.
pub trait Learner: Sync {
    fn fit(&self, table: &PartitionedTable, exec: &ExecutorConfig) -> Result<Model>;

    /// Relative training cost, used to prefer cheaper configurations when
    /// scores tie. Lower is cheaper.
    fn cost(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmLearner {
    pub algorithm: Algorithm,
    pub params: TrainParams,
}

impl AlgorithmLearner {
    pub fn new(algorithm: Algorithm, params: TrainParams) -> Self {
        Self { algorithm, params }
    }
}

impl Learner for AlgorithmLearner {
    fn fit(&self, table: &PartitionedTable, exec: &ExecutorConfig) -> Result<Model> {
        fit_model(self.algorithm, &self.params, table, exec)
    }

    fn cost(&self) -> f64 {
        let p = &self.params;
        let tree = (p.tree.max_depth.max(1) * p.tree.max_bins) as f64;
        match self.algorithm {
            Algorithm::LogReg | Algorithm::Svm => p.gd.max_iterations as f64,
            Algorithm::NaiveBayes => 1.0,
            Algorithm::Tree => tree,
            Algorithm::Forest => p.forest.n_trees as f64 * tree,
            Algorithm::Gbt => p.gbt_stages as f64 * tree,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        let err = "knn".parse::<Algorithm>().unwrap_err().to_string();
        assert!(err.contains("logreg, svm, nb, tree, forest, gbt"), "{err}");
    }

    #[test]
    fn deeper_trees_cost_more() {
        let shallow = AlgorithmLearner::new(
            Algorithm::Tree,
            TrainParams {
                tree: TreeConfig {
                    max_depth: 2,
                    ..TreeConfig::default()
                },
                ..TrainParams::default()
            },
        );
        let deep = AlgorithmLearner::new(Algorithm::Tree, TrainParams::default());
        assert!(shallow.cost() < deep.cost());
    }
}
