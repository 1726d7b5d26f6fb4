//! Data-parallel training and evaluation of botnet-flow classifiers.
//!
//! Records are split round-robin into partitions; every training pass maps
//! over the partitions on a worker pool and merges the partials along a fixed
//! binary tree, so fitted models do not depend on the worker count.

pub mod autotune;
pub mod bayes;
pub mod engine;
pub mod error;
pub mod flowdata;
pub mod harness;
pub mod learner;
pub mod linear;
pub mod metrics;
pub mod model;
pub mod trees;

pub use engine::{partition, ExecutorConfig, PartitionedTable};
pub use error::{Error, Result};
pub use flowdata::{FlowSchema, LabeledRecord};
pub use learner::{fit_model, Algorithm, AlgorithmLearner, Learner, TrainParams};
pub use metrics::ConfusionMatrix;
pub use model::{Model, TrainedModel};
