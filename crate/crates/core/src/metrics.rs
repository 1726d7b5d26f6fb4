//! Confusion counts and the rates derived from them.
//!
//! Bot (label 1) is the positive class. The "weighted" metrics average the
//! per-class precision/recall/F1 of both classes by class support, which is
//! the aggregation the published result tables print.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tn: u64, fp: u64, fn_: u64, tp: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Rows whose true label is Benign.
    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    /// Rows whose true label is Bot.
    pub fn positives(&self) -> u64 {
        self.fn_ + self.tp
    }

    pub fn record(&mut self, prediction: u8, label: u8) {
        match (prediction, label) {
            (1, 1) => self.tp += 1,
            (0, 0) => self.tn += 1,
            (1, _) => self.fp += 1,
            _ => self.fn_ += 1,
        }
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            tp: self.tp + other.tp,
            tn: self.tn + other.tn,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
        }
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TN={} FP={} FN={} TP={}", self.tn, self.fp, self.fn_, self.tp)
    }
}

pub fn confusion(predictions: &[u8], labels: &[u8]) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        cm.record(p, l);
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Rates with a zero denominator are `None`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinaryMetrics {
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub accuracy: Option<f64>,
    pub f1_positive: Option<f64>,
}

impl BinaryMetrics {
    pub fn get(&self, name: &'static str) -> Result<f64> {
        let value = match name {
            "tpr" => self.tpr,
            "tnr" => self.tnr,
            "fpr" => self.fpr,
            "fnr" => self.fnr,
            "accuracy" => self.accuracy,
            "f1" => self.f1_positive,
            _ => None,
        };
        value.ok_or(Error::UndefinedMetric(name))
    }
}

pub fn binary_metrics(cm: &ConfusionMatrix) -> BinaryMetrics {
    let ConfusionMatrix { tp, tn, fp, fn_ } = *cm;
    BinaryMetrics {
        tpr: ratio(tp, fn_ + tp),
        tnr: ratio(tn, tn + fp),
        fpr: ratio(fp, fp + tn),
        fnr: ratio(fn_, fn_ + tp),
        accuracy: ratio(tn + tp, cm.total()),
        f1_positive: ratio(2 * tp, 2 * tp + fp + fn_),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Per-class precisions that had no predictions and were counted as 0.
    pub undefined: Vec<&'static str>,
}

/// Support-weighted two-class precision, recall and F1.
///
/// Requires both classes to be present. A class that was never predicted has
/// undefined precision; it is taken as 0 and listed in `undefined`.
pub fn weighted_metrics(cm: &ConfusionMatrix) -> Result<WeightedMetrics> {
    let ConfusionMatrix { tp, tn, fp, fn_ } = *cm;
    if cm.negatives() == 0 || cm.positives() == 0 {
        return Err(Error::UndefinedMetric("weighted"));
    }
    let total = cm.total() as f64;
    let mut undefined = Vec::new();
    // (correct, predicted as this class, support, name)
    let classes = [
        (tn, tn + fn_, tn + fp, "precision_benign"),
        (tp, tp + fp, fn_ + tp, "precision_bot"),
    ];
    let (mut precision, mut recall, mut f1) = (0.0, 0.0, 0.0);
    for (correct, predicted, support, name) in classes {
        let weight = support as f64 / total;
        let p = ratio(correct, predicted).unwrap_or_else(|| {
            undefined.push(name);
            0.0
        });
        let r = correct as f64 / support as f64;
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        precision += weight * p;
        recall += weight * r;
        f1 += weight * f;
    }
    Ok(WeightedMetrics {
        precision,
        recall,
        f1,
        undefined,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub confusion: ConfusionMatrix,
    pub binary: BinaryMetrics,
    pub weighted: Option<WeightedMetrics>,
}

pub fn report(cm: &ConfusionMatrix) -> MetricReport {
    MetricReport {
        confusion: *cm,
        binary: binary_metrics(cm),
        weighted: weighted_metrics(cm).ok(),
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.3}"));
        writeln!(f, "{}", self.confusion)?;
        writeln!(f, "TPR (recall)   {}", show(self.binary.tpr))?;
        writeln!(f, "TNR            {}", show(self.binary.tnr))?;
        writeln!(f, "FPR            {}", show(self.binary.fpr))?;
        writeln!(f, "FNR            {}", show(self.binary.fnr))?;
        writeln!(f, "Accuracy       {}", show(self.binary.accuracy))?;
        writeln!(f, "F1 (Bot)       {}", show(self.binary.f1_positive))?;
        match &self.weighted {
            Some(w) => {
                writeln!(f, "Precision (w)  {:.3}", w.precision)?;
                writeln!(f, "Recall (w)     {:.3}", w.recall)?;
                write!(f, "F-Measure (w)  {:.3}", w.f1)?;
                if !w.undefined.is_empty() {
                    write!(f, "\nundefined, counted as 0: {}", w.undefined.join(", "))?;
                }
                Ok(())
            }
            None => write!(f, "weighted metrics undefined (a class has no support)"),
        }
    }
}
