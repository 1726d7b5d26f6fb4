use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flowforge::bayes::NaiveBayesVariant;
use flowforge::harness::ReportFormat;
use flowforge::trees::ImpurityKind;
use flowforge::Algorithm;

#[derive(Parser, Debug)]
#[command(name = "flowforge", version, about = "Train and benchmark botnet-flow classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load and validate a flow CSV, print a summary
    Ingest {
        #[command(flatten)]
        data: DataArgs,
        /// Drop per-class IQR outliers after loading
        #[arg(long)]
        remove_outliers: bool,
        /// Write the cleaned rows here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic flow CSV
    Gen {
        #[arg(long, default_value_t = 100_000)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        noise_features: usize,
        /// Fraction of Bot rows
        #[arg(long, default_value_t = 0.273)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy forward feature selection
    Select {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        exec: ExecArgs,
        #[arg(long, default_value_t = 3)]
        folds: usize,
        /// Minimum score improvement to keep adding features
        #[arg(long, default_value_t = 1e-4)]
        epsilon: f64,
    },
    /// Random hyperparameter search with k-fold cross-validation
    Tune {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        exec: ExecArgs,
        #[arg(long, value_enum)]
        algo: AlgoArg,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 3)]
        folds: usize,
        #[command(flatten)]
        train: TrainArgs,
        /// Write the trial trace CSV here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit one model on every row and save it
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        exec: ExecArgs,
        #[arg(long, value_enum)]
        algo: AlgoArg,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved model on a CSV
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Run every algorithm at each worker count and report metrics and times
    Bench {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated algorithms
        #[arg(
            long,
            value_enum,
            value_delimiter = ',',
            default_value = "logreg,svm,nb,tree,forest,gbt"
        )]
        algo: Vec<AlgoArg>,
        /// Comma-separated worker counts
        #[arg(
            long,
            value_delimiter = ',',
            env = "FLOWFORGE_WORKERS",
            default_value = "1,2,3,4,5,6,7,8"
        )]
        workers: Vec<usize>,
        #[arg(long, default_value_t = flowforge::engine::DEFAULT_PARTITIONS)]
        partitions: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Fraction of rows held out for scoring
        #[arg(long, default_value_t = 0.3)]
        holdout: f64,
        /// Score on the training rows instead of a holdout
        #[arg(long)]
        eval_on_train: bool,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[command(flatten)]
        train: TrainArgs,
        /// Report file; per-algorithm series files are written beside it
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Input rows: a CSV via `--data`, or synthetic rows otherwise.
#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Key-value file with `label`, `features`, `benign` and `bot` entries
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Comma-separated feature columns
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    #[arg(long)]
    pub label_col: Option<String>,
    /// Synthetic rows when no `--data` is given
    #[arg(long, default_value_t = 100_000)]
    pub rows: usize,
    #[arg(long, default_value_t = 0)]
    pub noise_features: usize,
    #[arg(long, default_value_t = 0.273)]
    pub ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct ExecArgs {
    #[arg(long, env = "FLOWFORGE_WORKERS", default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = flowforge::engine::DEFAULT_PARTITIONS)]
    pub partitions: usize,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub max_bins: Option<usize>,
    #[arg(long, value_enum)]
    pub impurity: Option<ImpurityArg>,
    /// Forest size
    #[arg(long)]
    pub trees: Option<usize>,
    /// Boosting stages
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub smoothing: Option<f64>,
    #[arg(long, value_enum)]
    pub nb_variant: Option<VariantArg>,
    /// Gradient-descent iterations
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgoArg {
    Logreg,
    Svm,
    Nb,
    Tree,
    Forest,
    Gbt,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Logreg => Algorithm::LogReg,
            AlgoArg::Svm => Algorithm::Svm,
            AlgoArg::Nb => Algorithm::NaiveBayes,
            AlgoArg::Tree => Algorithm::Tree,
            AlgoArg::Forest => Algorithm::Forest,
            AlgoArg::Gbt => Algorithm::Gbt,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ImpurityArg {
    Gini,
    Entropy,
}

impl From<ImpurityArg> for ImpurityKind {
    fn from(i: ImpurityArg) -> Self {
        match i {
            ImpurityArg::Gini => ImpurityKind::Gini,
            ImpurityArg::Entropy => ImpurityKind::Entropy,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum VariantArg {
    Bernoulli,
    Multinomial,
}

impl From<VariantArg> for NaiveBayesVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Bernoulli => NaiveBayesVariant::Bernoulli,
            VariantArg::Multinomial => NaiveBayesVariant::Multinomial,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum FormatArg {
    Csv,
    Markdown,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Markdown => ReportFormat::Markdown,
        }
    }
}
