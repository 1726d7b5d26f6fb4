//! Fitted models behind one prediction interface, and their plain-text form.
//!
//! The text format is line oriented with tab-separated fields. Floats are
//! written with Rust's shortest round-trip formatting, so a model read back
//! predicts bit-identically. Tree nodes are written one per line in pre-order,
//! indented two spaces per level:
//!
//! ```text
//! tree	gini	4	1	3
//! 0	split	1	0.5	1	2	10	6
//!   1	leaf	0	10	0
//!   2	leaf	1	0	6
//! ```
#![allow(clippy::tabs_in_doc_comments)]

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::bayes::{posterior, predict_naive_bayes, NaiveBayesModel, NaiveBayesVariant};
use crate::engine::{self, ExecutorConfig, PartitionedTable};
use crate::error::{Error, Result};
use crate::linear::{predict_linear, LinearKind, LinearModel, Standardizer};
use crate::metrics::ConfusionMatrix;
use crate::trees::{ForestModel, GbtModel, ImpurityKind, TreeModel, TreeNode};

const HEADER: &str = "flowforge-model v1";

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Linear(LinearModel),
    NaiveBayes(NaiveBayesModel),
    Tree(TreeModel),
    Forest(ForestModel),
    Gbt(GbtModel),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Linear(m) => match m.kind {
                LinearKind::Logistic => "logreg",
                LinearKind::Svm => "svm",
            },
            Model::NaiveBayes(_) => "nb",
            Model::Tree(_) => "tree",
            Model::Forest(_) => "forest",
            Model::Gbt(_) => "gbt",
        }
    }

    pub fn feature_count(&self) -> usize {
        match self {
            Model::Linear(m) => m.feature_count(),
            Model::NaiveBayes(m) => m.feature_count(),
            Model::Tree(m) => m.feature_count,
            Model::Forest(m) => m.feature_count(),
            Model::Gbt(m) => m.feature_count(),
        }
    }

    pub fn predict(&self, features: &[f64]) -> Result<u8> {
        Ok(self.predict_scored(features)?.0)
    }

    /// Label plus a real score: probability of Bot for logistic, NB and GBT,
    /// the margin for SVM, the leaf value for a tree and the Bot vote share
    /// for a forest.
    pub fn predict_scored(&self, features: &[f64]) -> Result<(u8, f64)> {
        match self {
            Model::Linear(m) => predict_linear(m, features),
            Model::NaiveBayes(m) => {
                let (label, scores) = predict_naive_bayes(m, features)?;
                Ok((label, posterior(scores)[1]))
            }
            Model::Tree(m) => {
                let v = m.value(features)?;
                Ok((u8::from(v >= 0.5), v))
            }
            Model::Forest(m) => {
                let label = m.predict(features)?;
                let votes = m.votes(features)?;
                Ok((label, votes as f64 / m.trees.len().max(1) as f64))
            }
            Model::Gbt(m) => m.predict(features),
        }
    }
}

/// Confusion counts of `model` over every row of `table`, in one pass.
pub fn evaluate(model: &Model, table: &PartitionedTable, exec: &ExecutorConfig) -> Result<ConfusionMatrix> {
    engine::try_tree_aggregate(
        table,
        exec,
        ConfusionMatrix::default(),
        |mut cm, r| {
            cm.record(model.predict(&r.features)?, r.label);
            Ok(cm)
        },
        ConfusionMatrix::merge,
    )
}

/// A model together with the feature columns it was trained on.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub feature_names: Vec<String>,
    pub model: Model,
}

impl TrainedModel {
    pub fn new(feature_names: Vec<String>, model: Model) -> Result<Self> {
        if feature_names.len() != model.feature_count() {
            return Err(Error::DimensionMismatch {
                expected: model.feature_count(),
                actual: feature_names.len(),
            });
        }
        Ok(Self { feature_names, model })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        line(&mut out, [HEADER]);
        line(&mut out, ["kind", self.model.name()]);
        line(
            &mut out,
            std::iter::once("features").chain(self.feature_names.iter().map(String::as_str)),
        );
        match &self.model {
            Model::Linear(m) => write_linear(&mut out, m),
            Model::NaiveBayes(m) => write_bayes(&mut out, m),
            Model::Tree(m) => write_tree(&mut out, m),
            Model::Forest(m) => {
                line(&mut out, ["trees".to_string(), m.trees.len().to_string()]);
                for t in &m.trees {
                    write_tree(&mut out, t);
                }
            }
            Model::Gbt(m) => {
                floats(&mut out, "init", &[m.init]);
                floats(&mut out, "learning_rate", &[m.learning_rate]);
                line(&mut out, ["trees".to_string(), m.trees.len().to_string()]);
                for t in &m.trees {
                    write_tree(&mut out, t);
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text);
        let (n, first) = r.next_line()?;
        if first != [HEADER] {
            return Err(Error::model_format(n, format!("expected `{HEADER}`")));
        }
        let kind: String = r.scalar("kind")?;
        let feature_names: Vec<String> = r.fields("features")?.1.into_iter().map(str::to_string).collect();
        let model = match kind.as_str() {
            "logreg" => Model::Linear(read_linear(&mut r, LinearKind::Logistic)?),
            "svm" => Model::Linear(read_linear(&mut r, LinearKind::Svm)?),
            "nb" => Model::NaiveBayes(read_bayes(&mut r)?),
            "tree" => Model::Tree(read_tree(&mut r)?),
            "forest" => {
                let count: usize = r.scalar("trees")?;
                let trees = (0..count).map(|_| read_tree(&mut r)).collect::<Result<_>>()?;
                Model::Forest(ForestModel { trees })
            }
            "gbt" => {
                let init = r.scalar("init")?;
                let learning_rate = r.scalar("learning_rate")?;
                let count: usize = r.scalar("trees")?;
                let trees = (0..count).map(|_| read_tree(&mut r)).collect::<Result<_>>()?;
                Model::Gbt(GbtModel {
                    init,
                    learning_rate,
                    trees,
                })
            }
            other => return Err(Error::model_format(r.line, format!("unknown model kind `{other}`"))),
        };
        r.finish()?;
        let expected = model.feature_count();
        // an empty ensemble carries no width of its own
        if expected != feature_names.len() && !(expected == 0 && matches!(model, Model::Forest(_) | Model::Gbt(_))) {
            return Err(Error::model_format(
                3,
                format!("{} feature names for a {expected}-feature model", feature_names.len()),
            ));
        }
        Ok(Self { feature_names, model })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|source| Error::IoFailure {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::IoFailure {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }
}

fn line<I, S>(out: &mut String, fields: I)
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    for (i, f) in fields.into_iter().enumerate() {
        if i > 0 {
            out.push('\t');
        }
        out.push_str(f.as_ref());
    }
    out.push('\n');
}

fn floats(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    for v in values {
        let _ = write!(out, "\t{v}");
    }
    out.push('\n');
}

fn write_linear(out: &mut String, m: &LinearModel) {
    floats(out, "weights", &m.weights);
    floats(out, "intercept", &[m.intercept]);
    floats(out, "means", &m.standardizer.means);
    floats(out, "scales", &m.standardizer.scales);
    line(out, ["iterations".to_string(), m.iterations_run.to_string()]);
    floats(out, "objective", &[m.final_objective]);
}

fn write_bayes(out: &mut String, m: &NaiveBayesModel) {
    line(out, ["variant", m.variant.name()]);
    floats(out, "log_priors", &m.log_priors);
    floats(out, "log_likelihoods_0", &m.log_likelihoods[0]);
    floats(out, "log_likelihoods_1", &m.log_likelihoods[1]);
    floats(out, "log_complements_0", &m.log_complements[0]);
    floats(out, "log_complements_1", &m.log_complements[1]);
    floats(out, "binarize_threshold", &[m.binarize_threshold]);
    floats(out, "smoothing", &[m.smoothing]);
}

fn write_tree(out: &mut String, t: &TreeModel) {
    let _ = writeln!(
        out,
        "tree\t{}\t{}\t{}\t{}",
        t.impurity,
        t.feature_count,
        t.max_depth_used,
        t.nodes.len()
    );
    let mut stack = vec![(0usize, 0usize)];
    while let Some((id, depth)) = stack.pop() {
        for _ in 0..depth {
            out.push_str("  ");
        }
        match &t.nodes[id] {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                stats,
            } => {
                let _ = write!(out, "{id}\tsplit\t{feature}\t{threshold}\t{left}\t{right}");
                stats.iter().for_each(|s| {
                    let _ = write!(out, "\t{s}");
                });
                stack.push((*right, depth + 1));
                stack.push((*left, depth + 1));
            }
            TreeNode::Leaf { value, stats } => {
                let _ = write!(out, "{id}\tleaf\t{value}");
                stats.iter().for_each(|s| {
                    let _ = write!(out, "\t{s}");
                });
            }
        }
        out.push('\n');
    }
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate(),
            line: 0,
        }
    }

    fn next_line(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, raw) in self.lines.by_ref() {
            self.line = i + 1;
            let trimmed = raw.trim_start_matches(' ').trim_end_matches('\r');
            if !trimmed.is_empty() {
                return Ok((self.line, trimmed.split('\t').collect()));
            }
        }
        Err(Error::model_format(self.line + 1, "unexpected end of model"))
    }

    fn fields(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, mut fields) = self.next_line()?;
        if fields[0] != key {
            return Err(Error::model_format(
                n,
                format!("expected `{key}`, found `{}`", fields[0]),
            ));
        }
        fields.remove(0);
        Ok((n, fields))
    }

    fn scalar<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let (n, fields) = self.fields(key)?;
        match fields.as_slice() {
            [v] => parse(n, v),
            _ => Err(Error::model_format(n, format!("`{key}` takes one value"))),
        }
    }

    fn floats(&mut self, key: &str) -> Result<Vec<f64>> {
        let (n, fields) = self.fields(key)?;
        fields.iter().map(|v| parse(n, v)).collect()
    }

    fn finish(&mut self) -> Result<()> {
        match self.next_line() {
            Ok((n, _)) => Err(Error::model_format(n, "trailing content")),
            Err(_) => Ok(()),
        }
    }
}

fn parse<T: FromStr>(line: usize, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::model_format(line, format!("cannot parse `{v}`")))
}

fn pair(line: usize, v: Vec<f64>) -> Result<[f64; 2]> {
    v.try_into()
        .map_err(|_| Error::model_format(line, "expected two values"))
}

fn read_linear(r: &mut Reader<'_>, kind: LinearKind) -> Result<LinearModel> {
    let weights = r.floats("weights")?;
    let intercept = r.scalar("intercept")?;
    let means = r.floats("means")?;
    let scales = r.floats("scales")?;
    if means.len() != weights.len() || scales.len() != weights.len() {
        return Err(Error::model_format(r.line, "standardizer width differs from weights"));
    }
    Ok(LinearModel {
        kind,
        weights,
        intercept,
        standardizer: Standardizer { means, scales },
        iterations_run: r.scalar("iterations")?,
        final_objective: r.scalar("objective")?,
    })
}

fn read_bayes(r: &mut Reader<'_>) -> Result<NaiveBayesModel> {
    let variant = match r.scalar::<String>("variant")?.as_str() {
        "bernoulli" => NaiveBayesVariant::Bernoulli,
        "multinomial" => NaiveBayesVariant::Multinomial,
        other => return Err(Error::model_format(r.line, format!("unknown variant `{other}`"))),
    };
    let log_priors = pair(r.line + 1, r.floats("log_priors")?)?;
    let log_likelihoods = [r.floats("log_likelihoods_0")?, r.floats("log_likelihoods_1")?];
    let log_complements = [r.floats("log_complements_0")?, r.floats("log_complements_1")?];
    let d = log_likelihoods[0].len();
    let complement_width = if variant == NaiveBayesVariant::Bernoulli { d } else { 0 };
    if log_likelihoods[1].len() != d || log_complements.iter().any(|c| c.len() != complement_width) {
        return Err(Error::model_format(r.line, "inconsistent likelihood widths"));
    }
    Ok(NaiveBayesModel {
        variant,
        log_priors,
        log_likelihoods,
        log_complements,
        binarize_threshold: r.scalar("binarize_threshold")?,
        smoothing: r.scalar("smoothing")?,
    })
}

fn read_tree(r: &mut Reader<'_>) -> Result<TreeModel> {
    let (n, head) = r.fields("tree")?;
    let [impurity, width, depth, count] = head.as_slice() else {
        return Err(Error::model_format(
            n,
            "tree header needs impurity, width, depth and node count",
        ));
    };
    let impurity: ImpurityKind = impurity
        .parse()
        .map_err(|_| Error::model_format(n, format!("unknown impurity `{impurity}`")))?;
    let feature_count: usize = parse(n, width)?;
    let max_depth_used: usize = parse(n, depth)?;
    let count: usize = parse(n, count)?;
    if count == 0 {
        return Err(Error::model_format(n, "a tree needs at least one node"));
    }
    let mut nodes: Vec<Option<TreeNode>> = vec![None; count];
    for _ in 0..count {
        let (n, f) = r.next_line()?;
        if f.len() < 3 {
            return Err(Error::model_format(n, "truncated node"));
        }
        let id: usize = parse(n, f[0])?;
        let stats_from = |i: usize| f[i..].iter().map(|v| parse(n, v)).collect::<Result<Vec<f64>>>();
        let node = match f[1] {
            "split" if f.len() >= 6 => {
                let feature: usize = parse(n, f[2])?;
                let left: usize = parse(n, f[4])?;
                let right: usize = parse(n, f[5])?;
                // children always follow their parent in the arena
                if feature >= feature_count || left <= id || right <= id || left >= count || right >= count {
                    return Err(Error::model_format(n, "split references an invalid feature or child"));
                }
                TreeNode::Split {
                    feature,
                    threshold: parse(n, f[3])?,
                    left,
                    right,
                    stats: stats_from(6)?,
                }
            }
            "leaf" => TreeNode::Leaf {
                value: parse(n, f[2])?,
                stats: stats_from(3)?,
            },
            other => return Err(Error::model_format(n, format!("unknown node kind `{other}`"))),
        };
        match nodes.get_mut(id) {
            Some(slot @ None) => *slot = Some(node),
            _ => {
                return Err(Error::model_format(
                    n,
                    format!("node id {id} is out of range or repeated"),
                ))
            }
        }
    }
    Ok(TreeModel {
        nodes: nodes.into_iter().map(|n| n.expect("all ids filled")).collect(),
        max_depth_used,
        impurity,
        feature_count,
    })
}
