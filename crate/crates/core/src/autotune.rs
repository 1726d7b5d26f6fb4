//! Stratified k-fold cross-validation, random hyperparameter search and
//! greedy forward feature selection.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bayes::NaiveBayesVariant;
use crate::engine::{self, ExecutorConfig, PartitionedTable};
use crate::error::{Error, Result};
use crate::flowdata::LabeledRecord;
use crate::learner::{Algorithm, AlgorithmLearner, Learner, TrainParams};
use crate::metrics::weighted_metrics;
use crate::model::evaluate;
use crate::trees::{ImpurityKind, TreeConfig};

pub const DEFAULT_FOLDS: usize = 3;
pub const DEFAULT_SELECTION_EPSILON: f64 = 1e-4;

/// Validation fold of every row (in `labels` order). Each class is shuffled
/// with one seeded stream, then dealt round-robin to the folds; the dealing
/// counter runs on from class 0 into class 1, so fold sizes differ by at most
/// one overall.
pub fn fold_assignments(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k must be at least 2, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::TooFewRows { rows: labels.len(), k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut dealt = 0;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].min(1) == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            folds[i] = dealt % k;
            dealt += 1;
        }
    }
    Ok(folds)
}

/// `(train, validation)` pairs. Rows keep their original relative order and
/// both sides use the partition count of `table`.
pub fn kfold_split(table: &PartitionedTable, k: usize, seed: u64) -> Result<Vec<(PartitionedTable, PartitionedTable)>> {
    let records = table.to_records();
    let labels: Vec<u8> = records.iter().map(|r| r.label).collect();
    let folds = fold_assignments(&labels, k, seed)?;
    (0..k)
        .map(|fold| {
            let (valid, train): (Vec<(usize, &LabeledRecord)>, Vec<_>) =
                records.iter().enumerate().partition(|(i, _)| folds[*i] == fold);
            let strip =
                |rows: Vec<(usize, &LabeledRecord)>| rows.into_iter().map(|(_, r)| r.clone()).collect::<Vec<_>>();
            Ok((
                engine::partition(strip(train), table.partition_count())?,
                engine::partition(strip(valid), table.partition_count())?,
            ))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            ParamValue::Real(v) => Some(*v),
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Text(_) => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Text(v) => f.write_str(v),
        }
    }
}

pub type ParamSet = BTreeMap<String, ParamValue>;

/// `key=value` pairs joined by `;`.
pub fn format_params(params: &ParamSet) -> String {
    params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distribution {
    Uniform,
    LogUniform,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParamSpec {
    Choice(Vec<ParamValue>),
    /// Inclusive on both ends.
    IntRange {
        low: i64,
        high: i64,
        distribution: Distribution,
    },
    RealRange {
        low: f64,
        high: f64,
        distribution: Distribution,
    },
}

impl ParamSpec {
    fn validate(&self, name: &str) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("parameter `{name}`: {msg}")));
        match self {
            ParamSpec::Choice(options) if options.is_empty() => bad("empty choice list"),
            ParamSpec::IntRange { low, high, .. } if low > high => bad("empty range"),
            ParamSpec::IntRange {
                low,
                distribution: Distribution::LogUniform,
                ..
            } if *low <= 0 => bad("log-uniform bounds must be positive"),
            ParamSpec::RealRange { low, high, .. } if !(low <= high && low.is_finite() && high.is_finite()) => {
                bad("empty range")
            }
            ParamSpec::RealRange {
                low,
                distribution: Distribution::LogUniform,
                ..
            } if *low <= 0.0 => bad("log-uniform bounds must be positive"),
            _ => Ok(()),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> ParamValue {
        match self {
            ParamSpec::Choice(options) => options[rng.random_range(0..options.len())].clone(),
            ParamSpec::IntRange {
                low,
                high,
                distribution: Distribution::Uniform,
            } => ParamValue::Int(rng.random_range(*low..=*high)),
            ParamSpec::IntRange {
                low,
                high,
                distribution: Distribution::LogUniform,
            } => {
                let (a, b) = ((*low as f64).ln(), ((*high + 1) as f64).ln());
                let v = rng.random_range(a..b).exp().floor() as i64;
                ParamValue::Int(v.clamp(*low, *high))
            }
            ParamSpec::RealRange {
                low,
                high,
                distribution: Distribution::Uniform,
            } => ParamValue::Real(if low == high {
                *low
            } else {
                rng.random_range(*low..*high)
            }),
            ParamSpec::RealRange {
                low,
                high,
                distribution: Distribution::LogUniform,
            } => {
                let (a, b) = (low.ln(), high.ln());
                ParamValue::Real(if a == b {
                    *low
                } else {
                    rng.random_range(a..b).exp().clamp(*low, *high)
                })
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSpace {
    specs: Vec<(String, ParamSpec)>,
}

impl ParamSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, spec: ParamSpec) -> Result<Self> {
        spec.validate(name)?;
        if self.specs.iter().any(|(n, _)| n == name) {
            return Err(Error::InvalidConfig(format!("parameter `{name}` given twice")));
        }
        self.specs.push((name.to_string(), spec));
        Ok(self)
    }

    pub fn specs(&self) -> &[(String, ParamSpec)] {
        &self.specs
    }

    /// One configuration; parameters are drawn in insertion order.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> ParamSet {
        self.specs
            .iter()
            .map(|(name, spec)| (name.clone(), spec.sample(rng)))
            .collect()
    }
}

/// Overrides `base` with the recognised keys of `set`: `max_depth`,
/// `max_bins`, `impurity`, `min_info_gain`, `min_rows_per_node`, `n_trees`,
/// `feature_subset_size`, `n_stages`, `learning_rate`, `smoothing`,
/// `variant`, `iterations`, `step_size`, `l2`.
pub fn apply_params(base: &TrainParams, set: &ParamSet) -> Result<TrainParams> {
    let mut p = base.clone();
    for (key, value) in set {
        let wrong = || Error::InvalidConfig(format!("parameter `{key}` cannot take `{value}`"));
        let count = || value.as_int().filter(|v| *v >= 0).map(|v| v as usize).ok_or_else(wrong);
        let real = || value.as_real().ok_or_else(wrong);
        match key.as_str() {
            "max_depth" => p.tree.max_depth = count()?,
            "max_bins" => p.tree.max_bins = count()?,
            "impurity" => p.tree.impurity = value.to_string().parse::<ImpurityKind>()?,
            "min_info_gain" => p.tree.min_info_gain = real()?,
            "min_rows_per_node" => p.tree.min_rows_per_node = count()?,
            "n_trees" => p.forest.n_trees = count()?,
            "feature_subset_size" => p.forest.feature_subset_size = Some(count()?),
            "n_stages" => p.gbt_stages = count()?,
            "learning_rate" => p.gbt_learning_rate = real()?,
            "smoothing" => p.smoothing = real()?,
            "variant" => {
                p.nb_variant = match value.to_string().as_str() {
                    "bernoulli" => NaiveBayesVariant::Bernoulli,
                    "multinomial" => NaiveBayesVariant::Multinomial,
                    _ => return Err(wrong()),
                }
            }
            "iterations" => p.gd.max_iterations = count()?,
            "step_size" => p.gd.step_size = real()?,
            "l2" => p.gd.l2_penalty = real()?,
            other => return Err(Error::InvalidConfig(format!("unknown parameter `{other}`"))),
        }
    }
    Ok(p)
}

/// Search space used by `tune` for each algorithm.
pub fn default_space(algorithm: Algorithm) -> ParamSpace {
    let int = |low, high| ParamSpec::IntRange {
        low,
        high,
        distribution: Distribution::Uniform,
    };
    let log_real = |low, high| ParamSpec::RealRange {
        low,
        high,
        distribution: Distribution::LogUniform,
    };
    let bins = ParamSpec::Choice([8, 16, 32, 64].map(ParamValue::Int).to_vec());
    let space = ParamSpace::new();
    let built = match algorithm {
        Algorithm::LogReg | Algorithm::Svm => space
            .with("step_size", log_real(0.01, 1.0))
            .and_then(|s| s.with("l2", log_real(1e-6, 1e-1))),
        Algorithm::NaiveBayes => space.with("smoothing", log_real(0.01, 10.0)),
        Algorithm::Tree => space
            .with("max_depth", int(1, 10))
            .and_then(|s| s.with("max_bins", bins))
            .and_then(|s| {
                s.with(
                    "impurity",
                    ParamSpec::Choice(vec![
                        ParamValue::Text("gini".into()),
                        ParamValue::Text("entropy".into()),
                    ]),
                )
            }),
        Algorithm::Forest => space
            .with("max_depth", int(2, 10))
            .and_then(|s| s.with("n_trees", int(5, 30))),
        Algorithm::Gbt => space
            .with("max_depth", int(1, 6))
            .and_then(|s| s.with("n_stages", int(5, 50)))
            .and_then(|s| s.with("learning_rate", log_real(0.05, 0.5))),
    };
    built.expect("built-in spaces are valid")
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub params: ParamSet,
    /// Weighted F1 of each validation fold.
    pub fold_scores: Vec<f64>,
    pub mean_score: f64,
    pub mean_train_seconds: f64,
    /// Learner cost; the tie-breaker between equal scores.
    pub cost: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Trains on every train fold and scores weighted F1 on its validation
/// fold. Folds run in parallel; each fit uses a single worker.
pub fn cross_validate<L: Learner + ?Sized>(
    table: &PartitionedTable,
    learner: &L,
    k: usize,
    seed: u64,
    exec: &ExecutorConfig,
) -> Result<TrialResult> {
    let folds = kfold_split(table, k, seed)?;
    for (fold, (train, valid)) in folds.iter().enumerate() {
        for split in [train, valid] {
            let counts = split.class_counts();
            if let Some(class) = (0..2u8).find(|&c| counts[usize::from(c)] == 0) {
                return Err(Error::DegenerateFold { fold, class });
            }
        }
    }
    let inner = exec.with_workers(1);
    let outcomes = engine::run_tasks(folds.len(), exec.worker_count, |i| -> Result<(f64, f64)> {
        let (train, valid) = &folds[i];
        let fitted = engine::timed(|| learner.fit(train, &inner));
        let model = fitted.value?;
        let cm = evaluate(&model, valid, &inner)?;
        Ok((weighted_metrics(&cm)?.f1, fitted.wall_seconds))
    });
    let (fold_scores, seconds): (Vec<f64>, Vec<f64>) =
        outcomes.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok(TrialResult {
        params: ParamSet::new(),
        mean_score: mean(&fold_scores),
        fold_scores,
        mean_train_seconds: mean(&seconds),
        cost: learner.cost(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub best_index: usize,
    pub trials: Vec<TrialResult>,
}

impl SearchResult {
    pub fn best(&self) -> &TrialResult {
        &self.trials[self.best_index]
    }
}

/// Index of the best trial: highest mean score, then lowest cost, then
/// lowest index.
pub fn best_trial(trials: &[TrialResult]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, t) in trials.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &trials[b];
                t.mean_score > cur.mean_score || (t.mean_score == cur.mean_score && t.cost < cur.cost)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Evaluates `n_trials` configurations drawn up front from a stream seeded
/// with `seed`. Trials are spread over the workers; every trial sees the same
/// folds. A failing trial aborts the search with its index attached.
pub fn random_search<L, F>(
    table: &PartitionedTable,
    factory: F,
    space: &ParamSpace,
    n_trials: usize,
    k: usize,
    seed: u64,
    exec: &ExecutorConfig,
) -> Result<SearchResult>
where
    L: Learner,
    F: Fn(&ParamSet) -> Result<L> + Sync,
{
    if n_trials == 0 {
        return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets: Vec<ParamSet> = (0..n_trials).map(|_| space.sample(&mut rng)).collect();
    let inner = exec.with_workers(1);
    let outcomes = engine::run_tasks(n_trials, exec.worker_count, |i| -> Result<TrialResult> {
        let learner = factory(&sets[i])?;
        let mut result = cross_validate(table, &learner, k, seed, &inner)?;
        result.params = sets[i].clone();
        Ok(result)
    });
    let trials = outcomes
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Trial {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best_index = best_trial(&trials).expect("at least one trial");
    Ok(SearchResult { best_index, trials })
}

/// Tuning trace with columns
/// `trial_index,params,fold_scores,mean_score,mean_seconds`.
pub fn trace_csv(trials: &[TrialResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial_index", "params", "fold_scores", "mean_score", "mean_seconds"])?;
    for (i, t) in trials.iter().enumerate() {
        let scores: Vec<String> = t.fold_scores.iter().map(f64::to_string).collect();
        w.write_record([
            i.to_string(),
            format_params(&t.params),
            scores.join(";"),
            t.mean_score.to_string(),
            t.mean_train_seconds.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult {
    pub selected_features: Vec<String>,
    /// Feature set after each accepted round and its CV score.
    pub score_trace: Vec<(Vec<String>, f64)>,
}

/// Depth-3 gini tree.
pub fn default_selection_learner() -> AlgorithmLearner {
    AlgorithmLearner::new(
        Algorithm::Tree,
        TrainParams {
            tree: TreeConfig {
                max_depth: 3,
                ..TreeConfig::default()
            },
            ..TrainParams::default()
        },
    )
}

/// Greedy forward selection. Each round scores every remaining feature added
/// to the current set (in parallel) and keeps the best; equal scores go to
/// the lexicographically smallest name. Stops once the best addition improves
/// the score by no more than `epsilon`. Candidate tables list their columns
/// in the original column order.
pub fn select_features<L: Learner + ?Sized>(
    table: &PartitionedTable,
    feature_names: &[String],
    learner: &L,
    k: usize,
    seed: u64,
    epsilon: f64,
    exec: &ExecutorConfig,
) -> Result<SelectionResult> {
    let d = table.feature_count();
    if d < 2 {
        return Err(Error::TooFewFeatures(d));
    }
    if feature_names.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: feature_names.len(),
        });
    }
    let mut remaining: Vec<usize> = (0..d).collect();
    remaining.sort_by(|&a, &b| feature_names[a].cmp(&feature_names[b]));
    let mut selected: Vec<usize> = Vec::new();
    let mut current: Option<f64> = None;
    let mut score_trace = Vec::new();
    let inner = exec.with_workers(1);

    while !remaining.is_empty() {
        let scores = engine::run_tasks(remaining.len(), exec.worker_count, |j| -> Result<f64> {
            let mut cols = selected.clone();
            cols.push(remaining[j]);
            cols.sort_unstable();
            let projected = table.project(&cols)?;
            Ok(cross_validate(&projected, learner, k, seed, &inner)?.mean_score)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let mut best = 0;
        for (j, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = j;
            }
        }
        let score = scores[best];
        if current.is_some_and(|c| score <= c + epsilon) {
            break;
        }
        selected.push(remaining.remove(best));
        current = Some(score);
        score_trace.push((selected.iter().map(|&i| feature_names[i].clone()).collect(), score));
    }
    Ok(SelectionResult {
        selected_features: selected.iter().map(|&i| feature_names[i].clone()).collect(),
        score_trace,
    })
}
