//! Logistic regression and linear SVM trained by deterministic full-batch
//! gradient descent. Each iteration is one aggregation pass over the table.

use crate::engine::{self, ExecutorConfig, PartitionedTable};
use crate::error::{Error, Result};

/// Generalized logistic curve `L / (1 + exp(-k (x - x0)))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmoidParams {
    pub max_value: f64,
    pub steepness: f64,
    pub midpoint: f64,
}

impl SigmoidParams {
    pub const STANDARD: SigmoidParams = SigmoidParams {
        max_value: 1.0,
        steepness: 1.0,
        midpoint: 0.0,
    };
}

impl Default for SigmoidParams {
    fn default() -> Self {
        Self::STANDARD
    }
}

pub fn sigmoid(x: f64, p: SigmoidParams) -> f64 {
    let t = p.steepness * (x - p.midpoint);
    if t >= 0.0 {
        p.max_value / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        p.max_value * e / (1.0 + e)
    }
}

fn logistic(z: f64) -> f64 {
    sigmoid(z, SigmoidParams::STANDARD)
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LinearKind {
    Logistic,
    Svm,
}

impl LinearKind {
    pub fn name(self) -> &'static str {
        match self {
            LinearKind::Logistic => "logistic",
            LinearKind::Svm => "svm",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GdConfig {
    pub max_iterations: usize,
    pub step_size: f64,
    pub l2_penalty: f64,
    pub tolerance: f64,
    pub standardize: bool,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            step_size: 0.1,
            l2_penalty: 1e-4,
            tolerance: 1e-9,
            standardize: true,
        }
    }
}

impl GdConfig {
    /// Defaults for raw, unscaled features.
    pub fn unstandardized() -> Self {
        Self {
            step_size: 1.0,
            standardize: false,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if !(self.l2_penalty >= 0.0 && self.tolerance >= 0.0) {
            return Err(Error::InvalidConfig(
                "l2 penalty and tolerance must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Per-feature affine map `z = (x - mean) / scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn identity(width: usize) -> Self {
        Self {
            means: vec![0.0; width],
            scales: vec![1.0; width],
        }
    }

    /// Population mean and standard deviation from one aggregation pass.
    /// Constant features get scale 1.
    pub fn fit(table: &PartitionedTable, exec: &ExecutorConfig) -> Self {
        let d = table.feature_count();
        let zero = (0usize, vec![0.0; d], vec![0.0; d]);
        let (n, sum, sum_sq) = engine::tree_aggregate(
            table,
            exec,
            zero,
            |(n, mut s, mut q), r| {
                for (j, &v) in r.features.iter().enumerate() {
                    s[j] += v;
                    q[j] += v * v;
                }
                (n + 1, s, q)
            },
            |(n1, s1, q1), (n2, s2, q2)| (n1 + n2, add(s1, &s2), add(q1, &q2)),
        );
        let n = n as f64;
        let means: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let scales = sum_sq
            .iter()
            .zip(&means)
            .map(|(q, m)| {
                let var = (q / n - m * m).max(0.0);
                let sd = var.sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { means, scales }
    }

    fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            x.iter()
                .zip(&self.means)
                .zip(&self.scales)
                .map(|((v, m), s)| (v - m) / s),
        );
    }
}

fn add(mut a: Vec<f64>, b: &[f64]) -> Vec<f64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub kind: LinearKind,
    /// Weights in standardized feature space.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub standardizer: Standardizer,
    pub iterations_run: usize,
    pub final_objective: f64,
}

impl LinearModel {
    pub fn feature_count(&self) -> usize {
        self.weights.len()
    }

    pub fn margin(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: features.len(),
            });
        }
        let s = &self.standardizer;
        let dot: f64 = features
            .iter()
            .zip(&self.weights)
            .zip(s.means.iter().zip(&s.scales))
            .map(|((x, w), (m, sc))| w * (x - m) / sc)
            .sum();
        Ok(dot + self.intercept)
    }
}

/// Label plus score: the probability for logistic models, the signed margin
/// for SVMs. Scores exactly on the boundary map to label 1.
pub fn predict_linear(model: &LinearModel, features: &[f64]) -> Result<(u8, f64)> {
    let margin = model.margin(features)?;
    Ok(match model.kind {
        LinearKind::Logistic => {
            let p = logistic(margin);
            (u8::from(p >= 0.5), p)
        }
        LinearKind::Svm => (u8::from(margin >= 0.0), margin),
    })
}

/// Mean loss plus `(l2 / 2) * |w|^2` and its (sub)gradient at
/// `params = [w_1 .. w_d, b]`, with features mapped through `standardizer`.
/// The intercept is not penalized; the hinge subgradient is 0 at margin 1.
pub fn objective_and_gradient(
    kind: LinearKind,
    table: &PartitionedTable,
    standardizer: &Standardizer,
    params: &[f64],
    l2_penalty: f64,
    exec: &ExecutorConfig,
) -> (f64, Vec<f64>) {
    let d = table.feature_count();
    assert_eq!(params.len(), d + 1, "params must hold d weights and an intercept");
    let (w, b) = params.split_at(d);
    let b = b[0];
    let partials = engine::map_partitions(table, exec, |_, rows| {
        let mut loss = 0.0;
        let mut grad = vec![0.0; d + 1];
        let mut z = Vec::with_capacity(d);
        for r in rows {
            standardizer.apply_into(&r.features, &mut z);
            let margin = z.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() + b;
            let coeff = match kind {
                LinearKind::Logistic => {
                    let y = f64::from(r.label);
                    loss += if r.label == 1 {
                        softplus(-margin)
                    } else {
                        softplus(margin)
                    };
                    logistic(margin) - y
                }
                LinearKind::Svm => {
                    let y = if r.label == 1 { 1.0 } else { -1.0 };
                    let m = y * margin;
                    if m < 1.0 {
                        loss += 1.0 - m;
                        -y
                    } else {
                        0.0
                    }
                }
            };
            if coeff != 0.0 {
                for (g, x) in grad.iter_mut().zip(&z) {
                    *g += coeff * x;
                }
                grad[d] += coeff;
            }
        }
        (loss, grad)
    });
    let (loss, grad) =
        engine::combine_tree(partials, |(l1, g1), (l2, g2)| (l1 + l2, add(g1, &g2))).expect("table has partitions");
    let n = table.total_rows() as f64;
    let penalty = 0.5 * l2_penalty * w.iter().map(|v| v * v).sum::<f64>();
    let mut grad: Vec<f64> = grad.into_iter().map(|g| g / n).collect();
    for (g, wj) in grad.iter_mut().zip(w) {
        *g += l2_penalty * wj;
    }
    (loss / n + penalty, grad)
}

fn require_both_classes(table: &PartitionedTable) -> Result<()> {
    let [neg, pos] = table.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::SingleClassData);
    }
    Ok(())
}

fn fit_linear(
    kind: LinearKind,
    table: &PartitionedTable,
    cfg: &GdConfig,
    exec: &ExecutorConfig,
) -> Result<LinearModel> {
    cfg.validate()?;
    require_both_classes(table)?;
    let d = table.feature_count();
    let standardizer = if cfg.standardize {
        Standardizer::fit(table, exec)
    } else {
        Standardizer::identity(d)
    };
    let mut params = vec![0.0; d + 1];
    let mut previous: Option<f64> = None;
    let mut iterations_run = 0;
    let mut last_objective = None;
    for iteration in 0..cfg.max_iterations {
        let (objective, grad) = objective_and_gradient(kind, table, &standardizer, &params, cfg.l2_penalty, exec);
        if !objective.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteObjective { iteration });
        }
        if let Some(prev) = previous {
            if prev - objective < cfg.tolerance {
                last_objective = Some(objective);
                break;
            }
        }
        previous = Some(objective);
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= cfg.step_size * g;
        }
        iterations_run += 1;
    }
    let final_objective = match last_objective {
        Some(obj) => obj,
        None => objective_and_gradient(kind, table, &standardizer, &params, cfg.l2_penalty, exec).0,
    };
    if !final_objective.is_finite() {
        return Err(Error::NonFiniteObjective {
            iteration: iterations_run,
        });
    }
    let intercept = params.pop().expect("intercept slot");
    Ok(LinearModel {
        kind,
        weights: params,
        intercept,
        standardizer,
        iterations_run,
        final_objective,
    })
}

pub fn fit_logistic(table: &PartitionedTable, cfg: &GdConfig, exec: &ExecutorConfig) -> Result<LinearModel> {
    fit_linear(LinearKind::Logistic, table, cfg, exec)
}

pub fn fit_svm(table: &PartitionedTable, cfg: &GdConfig, exec: &ExecutorConfig) -> Result<LinearModel> {
    fit_linear(LinearKind::Svm, table, cfg, exec)
}
