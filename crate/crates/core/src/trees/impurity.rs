use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ImpurityKind {
    #[default]
    Gini,
    Entropy,
    Variance,
}

impl ImpurityKind {
    pub fn name(self) -> &'static str {
        match self {
            ImpurityKind::Gini => "gini",
            ImpurityKind::Entropy => "entropy",
            ImpurityKind::Variance => "variance",
        }
    }
}

impl fmt::Display for ImpurityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ImpurityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gini" => Ok(ImpurityKind::Gini),
            "entropy" => Ok(ImpurityKind::Entropy),
            "variance" => Ok(ImpurityKind::Variance),
            other => Err(Error::InvalidConfig(format!("unknown impurity `{other}`"))),
        }
    }
}

/// `sum_i f_i (1 - f_i)` over label frequencies.
pub fn gini(counts: &[u64]) -> Result<f64> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptyNode);
    }
    let n = n as f64;
    Ok(counts
        .iter()
        .map(|&c| {
            let f = c as f64 / n;
            f * (1.0 - f)
        })
        .sum())
}

/// `sum_i -f_i log2 f_i`, with `0 log 0 = 0`.
pub fn entropy(counts: &[u64]) -> Result<f64> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptyNode);
    }
    let n = n as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let f = c as f64 / n;
            -f * f.log2()
        })
        .sum())
}

/// `sum_sq / n - (sum / n)^2`.
pub fn variance_impurity(hist: &MomentHistogram) -> Result<f64> {
    if hist.n <= 0.0 {
        return Err(Error::EmptyNode);
    }
    let mean = hist.sum / hist.n;
    Ok((hist.sum_sq / hist.n - mean * mean).max(0.0))
}

/// Mergeable per-node label statistics.
pub trait LabelHistogram: Clone + Default + Send + Sync {
    fn add_sample(&mut self, label: u8, target: f64, weight: u32);
    fn merge(&mut self, other: &Self);
    /// Weighted row count.
    fn weight(&self) -> f64;
    fn impurity(&self, kind: ImpurityKind) -> Result<f64>;
    fn is_pure(&self) -> bool;
    /// Majority class (ties to 0) or mean target.
    fn leaf_value(&self) -> f64;
    fn summary(&self) -> Vec<f64>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ClassHistogram {
    pub counts: [u64; 2],
}

impl ClassHistogram {
    pub fn new(benign: u64, bot: u64) -> Self {
        Self { counts: [benign, bot] }
    }
}

impl LabelHistogram for ClassHistogram {
    #[inline]
    fn add_sample(&mut self, label: u8, _target: f64, weight: u32) {
        self.counts[usize::from(label.min(1))] += u64::from(weight);
    }

    #[inline]
    fn merge(&mut self, other: &Self) {
        self.counts[0] += other.counts[0];
        self.counts[1] += other.counts[1];
    }

    fn weight(&self) -> f64 {
        (self.counts[0] + self.counts[1]) as f64
    }

    fn impurity(&self, kind: ImpurityKind) -> Result<f64> {
        match kind {
            ImpurityKind::Gini => gini(&self.counts),
            ImpurityKind::Entropy => entropy(&self.counts),
            ImpurityKind::Variance => {
                let [c0, c1] = self.counts;
                variance_impurity(&MomentHistogram {
                    n: (c0 + c1) as f64,
                    sum: c1 as f64,
                    sum_sq: c1 as f64,
                })
            }
        }
    }

    fn is_pure(&self) -> bool {
        self.counts[0] == 0 || self.counts[1] == 0
    }

    fn leaf_value(&self) -> f64 {
        if self.counts[1] > self.counts[0] {
            1.0
        } else {
            0.0
        }
    }

    fn summary(&self) -> Vec<f64> {
        vec![self.counts[0] as f64, self.counts[1] as f64]
    }
}

/// Weighted count, sum and sum of squares of a real-valued target.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MomentHistogram {
    pub n: f64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MomentHistogram {
    pub fn from_values(values: &[f64]) -> Self {
        let mut h = Self::default();
        for &v in values {
            h.add_sample(0, v, 1);
        }
        h
    }
}

impl LabelHistogram for MomentHistogram {
    #[inline]
    fn add_sample(&mut self, _label: u8, target: f64, weight: u32) {
        let w = f64::from(weight);
        self.n += w;
        self.sum += w * target;
        self.sum_sq += w * target * target;
    }

    #[inline]
    fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    fn weight(&self) -> f64 {
        self.n
    }

    fn impurity(&self, kind: ImpurityKind) -> Result<f64> {
        match kind {
            ImpurityKind::Variance => variance_impurity(self),
            other => Err(Error::InvalidConfig(format!("{other} impurity needs class labels"))),
        }
    }

    fn is_pure(&self) -> bool {
        self.n > 0.0 && variance_impurity(self).is_ok_and(|v| v == 0.0)
    }

    fn leaf_value(&self) -> f64 {
        if self.n > 0.0 {
            self.sum / self.n
        } else {
            0.0
        }
    }

    fn summary(&self) -> Vec<f64> {
        vec![self.n, self.sum, self.sum_sq]
    }
}
