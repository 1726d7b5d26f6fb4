//! Reference implementations shared by the integration tests.
#![allow(dead_code)]

use flowforge::trees::{ImpurityKind, TreeModel, TreeNode};
use flowforge::{partition, ExecutorConfig, LabeledRecord, PartitionedTable};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn exec(workers: usize) -> ExecutorConfig {
    ExecutorConfig::new(workers, 8, 0).unwrap()
}

pub fn table(rows: Vec<LabeledRecord>, partitions: usize) -> PartitionedTable {
    partition(rows, partitions).unwrap()
}

/// Small grid-valued dataset with duplicates; every class appears.
pub fn small_dataset(rng: &mut ChaCha8Rng, max_rows: usize, max_features: usize) -> Vec<LabeledRecord> {
    let n = rng.random_range(4..=max_rows);
    let d = rng.random_range(1..=max_features);
    let levels = rng.random_range(2..=12);
    let mut rows: Vec<LabeledRecord> = (0..n)
        .map(|_| {
            let features = (0..d).map(|_| f64::from(rng.random_range(0..levels)) * 0.5).collect();
            LabeledRecord::new(features, rng.random_range(0..2))
        })
        .collect();
    rows[0].label = 0;
    rows[1].label = 1;
    rows
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Leaf(u8),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Shape>,
        right: Box<Shape>,
    },
}

impl Shape {
    pub fn predict(&self, x: &[f64]) -> u8 {
        match self {
            Shape::Leaf(v) => *v,
            Shape::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }
}

/// Recursive view of a fitted arena tree.
pub fn shape_of(model: &TreeModel) -> Shape {
    fn walk(nodes: &[TreeNode], i: usize) -> Shape {
        match &nodes[i] {
            TreeNode::Leaf { value, .. } => Shape::Leaf(u8::from(*value >= 0.5)),
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => Shape::Split {
                feature: *feature,
                threshold: *threshold,
                left: Box::new(walk(nodes, *left)),
                right: Box::new(walk(nodes, *right)),
            },
        }
    }
    walk(&model.nodes, 0)
}

fn impurity(c: [u64; 2], kind: ImpurityKind) -> f64 {
    let n = (c[0] + c[1]) as f64;
    let mut total = 0.0;
    for k in c {
        let f = k as f64 / n;
        total += match kind {
            ImpurityKind::Entropy if k == 0 => 0.0,
            ImpurityKind::Entropy => -f * f.log2(),
            _ => f * (1.0 - f),
        };
    }
    total
}

fn counts(rows: &[&LabeledRecord]) -> [u64; 2] {
    let bots = rows.iter().filter(|r| r.label == 1).count() as u64;
    [rows.len() as u64 - bots, bots]
}

/// Midpoints between consecutive distinct values of every column.
pub fn exact_thresholds(rows: &[LabeledRecord]) -> Vec<Vec<f64>> {
    let d = rows[0].features.len();
    (0..d)
        .map(|j| {
            let mut v: Vec<f64> = rows.iter().map(|r| r.features[j]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect()
        })
        .collect()
}

/// Sequential exhaustive greedy tree: at each node try every threshold of
/// every feature on the raw rows and keep the largest positive gain (first
/// feature, then first threshold, on ties).
pub fn greedy_tree(rows: &[LabeledRecord], max_depth: usize, kind: ImpurityKind) -> Shape {
    let thresholds = exact_thresholds(rows);
    let all: Vec<&LabeledRecord> = rows.iter().collect();
    grow(&all, &thresholds, max_depth, kind)
}

fn grow(rows: &[&LabeledRecord], thresholds: &[Vec<f64>], depth_left: usize, kind: ImpurityKind) -> Shape {
    let c = counts(rows);
    let leaf = Shape::Leaf(u8::from(c[1] > c[0]));
    if depth_left == 0 || c[0] == 0 || c[1] == 0 {
        return leaf;
    }
    let n = rows.len() as f64;
    let parent = impurity(c, kind);
    let mut best: Option<(f64, usize, f64)> = None;
    for (j, ts) in thresholds.iter().enumerate() {
        for &t in ts {
            let (l, r): (Vec<&LabeledRecord>, Vec<&LabeledRecord>) = rows.iter().partition(|x| x.features[j] <= t);
            if l.is_empty() || r.is_empty() {
                continue;
            }
            let (nl, nr) = (l.len() as f64, r.len() as f64);
            let gain = parent - (nl / n) * impurity(counts(&l), kind) - (nr / n) * impurity(counts(&r), kind);
            if gain > 0.0 && best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, j, t));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return leaf;
    };
    let (l, r): (Vec<&LabeledRecord>, Vec<&LabeledRecord>) =
        rows.iter().partition(|x| x.features[feature] <= threshold);
    Shape::Split {
        feature,
        threshold,
        left: Box::new(grow(&l, thresholds, depth_left - 1, kind)),
        right: Box::new(grow(&r, thresholds, depth_left - 1, kind)),
    }
}

/// Exact Bernoulli naive Bayes with add-`alpha` smoothing over binary rows.
/// Returns the class with the larger joint probability; ties give 0.
pub fn exact_bernoulli_nb(rows: &[LabeledRecord], alpha: i64, x: &[u8]) -> u8 {
    let int = |v: i64| BigRational::from_integer(BigInt::from(v));
    let n = rows.len() as i64;
    let mut joint = [int(0), int(0)];
    for (c, slot) in joint.iter_mut().enumerate() {
        let in_class: Vec<&LabeledRecord> = rows.iter().filter(|r| usize::from(r.label) == c).collect();
        let nc = in_class.len() as i64;
        let mut p = int(nc) / int(n);
        for (j, &bit) in x.iter().enumerate() {
            let ones = in_class.iter().filter(|r| r.features[j] > 0.0).count() as i64;
            let on = (int(ones) + int(alpha)) / (int(nc) + int(2 * alpha));
            p *= if bit == 1 { on } else { int(1) - on };
        }
        *slot = p;
    }
    u8::from(joint[1] > joint[0])
}

/// Exact support-weighted precision, recall and F1 as rationals.
pub fn exact_weighted(tn: u64, fp: u64, fn_: u64, tp: u64) -> [BigRational; 3] {
    let r = |a: u64, b: u64| BigRational::new(BigInt::from(a), BigInt::from(b));
    let total = tn + fp + fn_ + tp;
    let zero = BigRational::from_integer(BigInt::from(0));
    let mut out = [zero.clone(), zero.clone(), zero.clone()];
    for (correct, predicted, support) in [(tn, tn + fn_, tn + fp), (tp, tp + fp, fn_ + tp)] {
        let w = r(support, total);
        let p = if predicted == 0 {
            zero.clone()
        } else {
            r(correct, predicted)
        };
        let rc = r(correct, support);
        let f = if p == zero && rc == zero {
            zero.clone()
        } else {
            BigRational::from_integer(BigInt::from(2)) * &p * &rc / (&p + &rc)
        };
        out[0] += &w * p;
        out[1] += &w * rc;
        out[2] += w * f;
    }
    out
}

pub fn to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
