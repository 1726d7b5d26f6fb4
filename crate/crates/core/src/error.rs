use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column `{0}` is missing from the CSV header")]
    MissingColumn(String),
    #[error("no rows left in the dataset")]
    EmptyDataset,
    #[error("I/O failure on {path:?}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("invalid class ratio {0}, expected a value in (0, 1)")]
    InvalidRatio(f64),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },
    #[error("expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
    #[error("multinomial naive Bayes requires non-negative features (feature {feature} = {value})")]
    NegativeFeature { feature: usize, value: f64 },
    #[error("impurity of an empty node is undefined")]
    EmptyNode,
    #[error("predictions and labels differ in length ({predictions} vs {labels})")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("metric `{0}` is undefined (zero denominator)")]
    UndefinedMetric(&'static str),
    #[error("too few rows ({rows}) for {k} folds")]
    TooFewRows { rows: usize, k: usize },
    #[error("fold {fold} is missing class {class}")]
    DegenerateFold { fold: usize, class: u8 },
    #[error("feature selection needs at least two features, got {0}")]
    TooFewFeatures(usize),
    #[error("trial {index} failed")]
    Trial {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("model parse error on line {line}: {message}")]
    ModelFormat { line: usize, message: String },
}

impl Error {
    pub(crate) fn model_format(line: usize, message: impl Into<String>) -> Self {
        Error::ModelFormat {
            line,
            message: message.into(),
        }
    }

    /// An I/O failure caused by the reader or writer closing its end.
    pub fn is_broken_pipe(&self) -> bool {
        let kind = match self {
            Error::IoFailure { source, .. } => Some(source.kind()),
            Error::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(io) => Some(io.kind()),
                _ => None,
            },
            _ => None,
        };
        kind == Some(std::io::ErrorKind::BrokenPipe)
    }
}
