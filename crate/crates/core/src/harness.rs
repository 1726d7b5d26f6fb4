//! Experiment driver: fits each algorithm at several worker counts and
//! records confusion counts, weighted metrics and training time.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{self, ExecutorConfig, DEFAULT_PARTITIONS};
use crate::error::{Error, Result};
use crate::flowdata::{
    default_label_map, generate_synthetic, load_csv, project_features, remove_outliers, FlowSchema, LabelMap,
    LabeledRecord, DEFAULT_LABEL_COLUMN, DEFAULT_OUTLIER_K, SELECTED_FEATURES,
};
use crate::learner::{fit_model, Algorithm, TrainParams};
use crate::metrics::{weighted_metrics, ConfusionMatrix, WeightedMetrics};
use crate::model::evaluate;

pub const DEFAULT_REPEATS: usize = 3;
pub const DEFAULT_HOLDOUT: f64 = 0.3;
pub const REPORT_HEADER: &str = "algorithm,workers,repeat,tn,fp,fn,tp,precision,recall,f1,train_seconds";

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        label_column: String,
        label_map: LabelMap,
        /// Apply the per-class IQR filter after loading.
        remove_outliers: bool,
    },
    Synthetic {
        rows: usize,
        noise_features: usize,
        ratio: f64,
    },
}

impl DataSource {
    pub fn csv(path: impl Into<PathBuf>) -> Self {
        DataSource::Csv {
            path: path.into(),
            label_column: DEFAULT_LABEL_COLUMN.to_string(),
            label_map: default_label_map(),
            remove_outliers: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub source: DataSource,
    /// Feature columns to use; empty means the selected four for CSV input
    /// and every generated column for synthetic input.
    pub features: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub worker_counts: Vec<usize>,
    pub partition_count: usize,
    pub repeats: usize,
    pub seed: u64,
    pub holdout_fraction: f64,
    /// Score on the training rows instead of a holdout.
    pub eval_on_train: bool,
    pub params: TrainParams,
}

impl ExperimentPlan {
    pub fn new(source: DataSource, algorithms: Vec<Algorithm>) -> Self {
        Self {
            source,
            features: Vec::new(),
            algorithms,
            worker_counts: (1..=8).collect(),
            partition_count: DEFAULT_PARTITIONS,
            repeats: DEFAULT_REPEATS,
            seed: 0,
            holdout_fraction: DEFAULT_HOLDOUT,
            eval_on_train: false,
            params: TrainParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.algorithms.is_empty() {
            return bad("the plan names no algorithms".into());
        }
        if self.worker_counts.is_empty() || self.worker_counts.contains(&0) {
            return bad("worker counts must be non-empty and at least 1".into());
        }
        if self.partition_count == 0 || self.repeats == 0 {
            return bad("partition count and repeats must be at least 1".into());
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return bad(format!(
                "holdout fraction must be in (0, 1), got {}",
                self.holdout_fraction
            ));
        }
        Ok(())
    }

    /// Loads the dataset and applies the feature list.
    pub fn load(&self) -> Result<(Vec<LabeledRecord>, Vec<String>)> {
        let (records, schema) = match &self.source {
            DataSource::Csv {
                path,
                label_column,
                label_map,
                remove_outliers: filter,
            } => {
                let features: Vec<String> = if self.features.is_empty() {
                    SELECTED_FEATURES.iter().map(|s| s.to_string()).collect()
                } else {
                    self.features.clone()
                };
                let schema = FlowSchema::from_features(&features, label_column)?;
                let (mut records, _) = load_csv(path, &schema, label_map)?;
                if *filter {
                    records = remove_outliers(records, DEFAULT_OUTLIER_K)?.0;
                }
                return Ok((records, features));
            }
            DataSource::Synthetic {
                rows,
                noise_features,
                ratio,
            } => generate_synthetic(*rows, *noise_features, *ratio, self.seed)?,
        };
        if self.features.is_empty() {
            return Ok((records, schema.feature_columns().to_vec()));
        }
        let (projected, schema) = project_features(&records, &self.features, &schema)?;
        Ok((projected, schema.feature_columns().to_vec()))
    }
}

/// Seeded stratified split into `(train, holdout)`; each class contributes
/// `round(fraction * class_rows)` holdout rows. Both sides keep the input
/// order.
pub fn stratified_holdout(
    records: Vec<LabeledRecord>,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledRecord>, Vec<LabeledRecord>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "holdout fraction must be in (0, 1), got {fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_holdout = vec![false; records.len()];
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..records.len())
            .filter(|&i| records[i].label.min(1) == class)
            .collect();
        members.shuffle(&mut rng);
        let take = (fraction * members.len() as f64).round() as usize;
        for &i in &members[..take] {
            in_holdout[i] = true;
        }
    }
    let (mut train, mut holdout) = (Vec::new(), Vec::new());
    for (r, held) in records.into_iter().zip(in_holdout) {
        if held {
            holdout.push(r);
        } else {
            train.push(r);
        }
    }
    if train.is_empty() || holdout.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok((train, holdout))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub algorithm: Algorithm,
    pub workers: usize,
    pub repeat: usize,
    pub confusion: Option<ConfusionMatrix>,
    pub weighted: Option<WeightedMetrics>,
    pub train_seconds: f64,
    /// Set when the cell failed; the other fields are then empty.
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    pub feature_names: Vec<String>,
    pub rows: Vec<ReportRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedupPoint {
    pub workers: usize,
    pub mean_seconds: f64,
    pub speedup: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmSpeedup {
    pub algorithm: Algorithm,
    /// Mean seconds at the smallest worker count (1 in a standard plan).
    pub baseline_seconds: f64,
    pub points: Vec<SpeedupPoint>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpeedupSummary {
    pub algorithms: Vec<AlgorithmSpeedup>,
}

impl SpeedupSummary {
    /// Mean seconds per `(algorithm, workers)` over the successful rows.
    pub fn from_report(report: &ExperimentReport) -> Self {
        let mut algorithms: Vec<Algorithm> = report.rows.iter().map(|r| r.algorithm).collect();
        algorithms.dedup();
        let mut out = Vec::new();
        for algorithm in algorithms {
            let mut workers: Vec<usize> = report
                .rows
                .iter()
                .filter(|r| r.algorithm == algorithm)
                .map(|r| r.workers)
                .collect();
            workers.sort_unstable();
            workers.dedup();
            let means: Vec<(usize, f64)> = workers
                .into_iter()
                .filter_map(|w| {
                    let secs: Vec<f64> = report
                        .rows
                        .iter()
                        .filter(|r| r.algorithm == algorithm && r.workers == w && r.error.is_none())
                        .map(|r| r.train_seconds)
                        .collect();
                    (!secs.is_empty()).then(|| (w, secs.iter().sum::<f64>() / secs.len() as f64))
                })
                .collect();
            let Some(&(_, baseline)) = means.first() else {
                continue;
            };
            let points = means
                .iter()
                .map(|&(w, m)| SpeedupPoint {
                    workers: w,
                    mean_seconds: m,
                    speedup: if m > 0.0 { baseline / m } else { 1.0 },
                })
                .collect();
            out.push(AlgorithmSpeedup {
                algorithm,
                baseline_seconds: baseline,
                points,
            });
        }
        Self { algorithms: out }
    }

    pub fn get(&self, algorithm: Algorithm) -> Option<&AlgorithmSpeedup> {
        self.algorithms.iter().find(|a| a.algorithm == algorithm)
    }
}

/// Loads the plan's data and runs every cell.
pub fn run_benchmark(plan: &ExperimentPlan) -> Result<(ExperimentReport, SpeedupSummary)> {
    plan.validate()?;
    let (records, names) = plan.load()?;
    run_benchmark_on(plan, records, names)
}

/// Runs every `(algorithm, workers, repeat)` cell, one at a time, on
/// already loaded records. Only the fit call is timed. A failing cell is
/// recorded and the run continues.
pub fn run_benchmark_on(
    plan: &ExperimentPlan,
    records: Vec<LabeledRecord>,
    feature_names: Vec<String>,
) -> Result<(ExperimentReport, SpeedupSummary)> {
    plan.validate()?;
    let (train, eval) = if plan.eval_on_train {
        let train = engine::partition(records, plan.partition_count)?;
        (train, None)
    } else {
        let (train, holdout) = stratified_holdout(records, plan.holdout_fraction, plan.seed)?;
        (
            engine::partition(train, plan.partition_count)?,
            Some(engine::partition(holdout, plan.partition_count)?),
        )
    };
    let eval = eval.as_ref().unwrap_or(&train);
    let mut report = ExperimentReport {
        feature_names,
        rows: Vec::new(),
    };
    for &algorithm in &plan.algorithms {
        for &workers in &plan.worker_counts {
            for repeat in 0..plan.repeats {
                let exec = ExecutorConfig::new(workers, plan.partition_count, plan.seed)?;
                let fitted = engine::timed(|| fit_model(algorithm, &plan.params, &train, &exec));
                let scored = fitted.value.and_then(|model| {
                    let cm = evaluate(&model, eval, &exec)?;
                    Ok((cm, weighted_metrics(&cm)?))
                });
                report.rows.push(match scored {
                    Ok((cm, weighted)) => ReportRow {
                        algorithm,
                        workers,
                        repeat,
                        confusion: Some(cm),
                        weighted: Some(weighted),
                        train_seconds: fitted.wall_seconds,
                        error: None,
                    },
                    Err(e) => ReportRow {
                        algorithm,
                        workers,
                        repeat,
                        confusion: None,
                        weighted: None,
                        train_seconds: fitted.wall_seconds,
                        error: Some(e.to_string()),
                    },
                });
            }
        }
    }
    let summary = SpeedupSummary::from_report(&report);
    Ok((report, summary))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// One CSV line per row. Failed cells leave the count, metric and time
/// fields empty.
pub fn report_csv_line(row: &ReportRow) -> String {
    let mut line = format!("{},{},{}", row.algorithm, row.workers, row.repeat);
    match (&row.confusion, &row.weighted) {
        (Some(cm), Some(w)) => {
            let _ = write!(
                line,
                ",{},{},{},{},{:.3},{:.3},{:.3},{:.2}",
                cm.tn, cm.fp, cm.fn_, cm.tp, w.precision, w.recall, w.f1, row.train_seconds
            );
        }
        _ => line.push_str(",,,,,,,,"),
    }
    line
}

pub fn render_report(report: &ExperimentReport, summary: &SpeedupSummary, format: ReportFormat) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(REPORT_HEADER);
            out.push('\n');
            for row in &report.rows {
                out.push_str(&report_csv_line(row));
                out.push('\n');
            }
        }
        ReportFormat::Markdown => {
            out.push_str("| Algorithm | Workers | Repeat | TN | FP | FN | TP | Precision | Recall | F-Measure | Training Time (s) |\n");
            out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
            for row in &report.rows {
                match (&row.confusion, &row.weighted) {
                    (Some(cm), Some(w)) => {
                        let _ = writeln!(
                            out,
                            "| {} | {} | {} | {} | {} | {} | {} | {:.3} | {:.3} | {:.3} | {:.2} |",
                            row.algorithm,
                            row.workers,
                            row.repeat,
                            cm.tn,
                            cm.fp,
                            cm.fn_,
                            cm.tp,
                            w.precision,
                            w.recall,
                            w.f1,
                            row.train_seconds
                        );
                    }
                    _ => {
                        let err = row.error.as_deref().unwrap_or("failed").replace('|', "/");
                        let _ = writeln!(
                            out,
                            "| {} | {} | {} | error: {err} | | | | | | | |",
                            row.algorithm, row.workers, row.repeat
                        );
                    }
                }
            }
            if !summary.algorithms.is_empty() {
                out.push_str("\n| Algorithm | Workers | Mean Time (s) | Speedup |\n|---|---:|---:|---:|\n");
                for a in &summary.algorithms {
                    for p in &a.points {
                        let _ = writeln!(
                            out,
                            "| {} | {} | {:.2} | {:.2} |",
                            a.algorithm, p.workers, p.mean_seconds, p.speedup
                        );
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `workers,seconds` series of one algorithm, for plotting.
pub fn render_series(speedup: &AlgorithmSpeedup) -> String {
    let mut out = String::from("workers,seconds\n");
    for p in &speedup.points {
        let _ = writeln!(out, "{},{:.4}", p.workers, p.mean_seconds);
    }
    out
}
