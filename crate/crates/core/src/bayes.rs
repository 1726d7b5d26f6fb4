//! Bernoulli and multinomial naive Bayes fitted from a single counting pass.

use crate::engine::{self, ExecutorConfig, PartitionedTable};
use crate::error::{Error, Result};

pub const DEFAULT_SMOOTHING: f64 = 1.0;
pub const DEFAULT_BINARIZE_THRESHOLD: f64 = 0.0;

/// Class scores closer than this are treated as a tie (resolved to Benign).
const TIE_EPSILON: f64 = 1e-10;

/// `P(A|B) = P(B|A) P(A) / P(B)`.
pub fn bayes_posterior(prior_a: f64, prob_b: f64, likelihood_b_given_a: f64) -> Result<f64> {
    for (name, p) in [("P(A)", prior_a), ("P(B)", prob_b), ("P(B|A)", likelihood_b_given_a)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(format!("{name} = {p} is outside [0, 1]")));
        }
    }
    if prob_b == 0.0 {
        return Err(Error::InvalidProbability("P(B) must be positive".into()));
    }
    Ok(likelihood_b_given_a * prior_a / prob_b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NaiveBayesVariant {
    Bernoulli,
    Multinomial,
}

impl NaiveBayesVariant {
    pub fn name(self) -> &'static str {
        match self {
            NaiveBayesVariant::Bernoulli => "bernoulli",
            NaiveBayesVariant::Multinomial => "multinomial",
        }
    }
}

/// Sufficient statistics of both classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassCounts {
    pub per_class_rows: [u64; 2],
    /// Bernoulli: rows with `x > threshold`; multinomial: summed feature mass.
    pub per_class_feature_stats: [Vec<f64>; 2],
}

impl ClassCounts {
    fn zero(width: usize) -> Self {
        Self {
            per_class_rows: [0, 0],
            per_class_feature_stats: [vec![0.0; width], vec![0.0; width]],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for c in 0..2 {
            self.per_class_rows[c] += other.per_class_rows[c];
            for (a, b) in self.per_class_feature_stats[c]
                .iter_mut()
                .zip(&other.per_class_feature_stats[c])
            {
                *a += b;
            }
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NaiveBayesModel {
    pub variant: NaiveBayesVariant,
    pub log_priors: [f64; 2],
    /// Bernoulli: `log P(x_j = 1 | y)`; multinomial: `log theta_jy`.
    pub log_likelihoods: [Vec<f64>; 2],
    /// Bernoulli only: `log P(x_j = 0 | y)`.
    pub log_complements: [Vec<f64>; 2],
    pub binarize_threshold: f64,
    pub smoothing: f64,
}

impl NaiveBayesModel {
    pub fn feature_count(&self) -> usize {
        self.log_likelihoods[0].len()
    }

    /// `log P(y) + log P(x | y)` for both classes.
    pub fn log_joint(&self, features: &[f64]) -> Result<[f64; 2]> {
        if features.len() != self.feature_count() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_count(),
                actual: features.len(),
            });
        }
        let mut scores = self.log_priors;
        for (c, score) in scores.iter_mut().enumerate() {
            let ll = &self.log_likelihoods[c];
            match self.variant {
                NaiveBayesVariant::Bernoulli => {
                    let lc = &self.log_complements[c];
                    for (j, &x) in features.iter().enumerate() {
                        *score += if x > self.binarize_threshold { ll[j] } else { lc[j] };
                    }
                }
                NaiveBayesVariant::Multinomial => {
                    for (j, &x) in features.iter().enumerate() {
                        *score += x * ll[j];
                    }
                }
            }
        }
        Ok(scores)
    }
}

pub fn fit_naive_bayes(
    table: &PartitionedTable,
    variant: NaiveBayesVariant,
    smoothing: f64,
    binarize_threshold: f64,
    exec: &ExecutorConfig,
) -> Result<NaiveBayesModel> {
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "smoothing must be positive, got {smoothing}"
        )));
    }
    let d = table.feature_count();
    let counts = engine::try_tree_aggregate(
        table,
        exec,
        ClassCounts::zero(d),
        |mut acc, r| {
            let c = usize::from(r.label.min(1));
            acc.per_class_rows[c] += 1;
            let stats = &mut acc.per_class_feature_stats[c];
            match variant {
                NaiveBayesVariant::Bernoulli => {
                    for (s, &x) in stats.iter_mut().zip(&r.features) {
                        if x > binarize_threshold {
                            *s += 1.0;
                        }
                    }
                }
                NaiveBayesVariant::Multinomial => {
                    for (j, (s, &x)) in stats.iter_mut().zip(&r.features).enumerate() {
                        if x < 0.0 {
                            return Err(Error::NegativeFeature { feature: j, value: x });
                        }
                        *s += x;
                    }
                }
            }
            Ok(acc)
        },
        ClassCounts::merge,
    )?;
    model_from_counts(&counts, variant, smoothing, binarize_threshold)
}

pub fn model_from_counts(
    counts: &ClassCounts,
    variant: NaiveBayesVariant,
    smoothing: f64,
    binarize_threshold: f64,
) -> Result<NaiveBayesModel> {
    let [n0, n1] = counts.per_class_rows;
    if n0 == 0 || n1 == 0 {
        return Err(Error::SingleClassData);
    }
    let total = (n0 + n1) as f64;
    let log_priors = [(n0 as f64 / total).ln(), (n1 as f64 / total).ln()];
    let d = counts.per_class_feature_stats[0].len();
    let mut log_likelihoods = [Vec::with_capacity(d), Vec::with_capacity(d)];
    let mut log_complements = [Vec::new(), Vec::new()];
    for c in 0..2 {
        let stats = &counts.per_class_feature_stats[c];
        match variant {
            NaiveBayesVariant::Bernoulli => {
                let rows = counts.per_class_rows[c] as f64;
                for &count in stats {
                    let p = (count + smoothing) / (rows + 2.0 * smoothing);
                    log_likelihoods[c].push(p.ln());
                    log_complements[c].push((1.0 - p).ln());
                }
            }
            NaiveBayesVariant::Multinomial => {
                let mass: f64 = stats.iter().sum();
                let denom = mass + smoothing * d as f64;
                log_likelihoods[c].extend(stats.iter().map(|m| ((m + smoothing) / denom).ln()));
            }
        }
    }
    Ok(NaiveBayesModel {
        variant,
        log_priors,
        log_likelihoods,
        log_complements,
        binarize_threshold,
        smoothing,
    })
}

/// Label and the per-class log-joint scores. Ties go to Benign.
pub fn predict_naive_bayes(model: &NaiveBayesModel, features: &[f64]) -> Result<(u8, [f64; 2])> {
    let scores = model.log_joint(features)?;
    let scale = scores[0].abs().max(scores[1].abs()).max(1.0);
    let label = u8::from(scores[1] - scores[0] > TIE_EPSILON * scale);
    Ok((label, scores))
}

/// Normalized class posteriors from log-joint scores.
pub fn posterior(scores: [f64; 2]) -> [f64; 2] {
    let m = scores[0].max(scores[1]);
    let e = [(scores[0] - m).exp(), (scores[1] - m).exp()];
    let z = e[0] + e[1];
    [e[0] / z, e[1] / z]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::partition;
    use crate::flowdata::LabeledRecord;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exec(w: usize) -> ExecutorConfig {
        ExecutorConfig::new(w, 8, 0).unwrap()
    }

    fn two_rows() -> PartitionedTable {
        partition(
            vec![LabeledRecord::new(vec![1.0], 1), LabeledRecord::new(vec![0.0], 0)],
            2,
        )
        .unwrap()
    }

    #[test]
    fn posterior_arithmetic() {
        assert!((bayes_posterior(0.3, 0.5, 0.6).unwrap() - 0.36).abs() < 1e-15);
        assert_eq!(bayes_posterior(0.3, 0.4, 0.4).unwrap(), 0.3);
        assert_eq!(bayes_posterior(1.0, 0.4, 0.4).unwrap(), 1.0);
        assert!(bayes_posterior(0.3, 0.0, 0.4).is_err());
        assert!(bayes_posterior(1.3, 0.5, 0.4).is_err());
    }

    #[test]
    fn smoothed_bernoulli_counts() {
        let m = fit_naive_bayes(&two_rows(), NaiveBayesVariant::Bernoulli, 1.0, 0.5, &exec(1)).unwrap();
        assert!((m.log_likelihoods[1][0].exp() - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.log_likelihoods[0][0].exp() - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.log_priors[0].exp() - 0.5).abs() < 1e-15);
        assert!((m.log_priors[1].exp() - 0.5).abs() < 1e-15);
        assert_eq!(predict_naive_bayes(&m, &[1.0]).unwrap().0, 1);
        assert_eq!(predict_naive_bayes(&m, &[0.0]).unwrap().0, 0);
    }

    #[test]
    fn single_pass() {
        let t = two_rows();
        fit_naive_bayes(&t, NaiveBayesVariant::Bernoulli, 1.0, 0.0, &exec(2)).unwrap();
        assert_eq!(t.pass_count(), 1);
    }

    #[test]
    fn tie_goes_to_benign() {
        let m = NaiveBayesModel {
            variant: NaiveBayesVariant::Bernoulli,
            log_priors: [0.5f64.ln(); 2],
            log_likelihoods: [vec![0.3f64.ln()], vec![0.3f64.ln()]],
            log_complements: [vec![0.7f64.ln()], vec![0.7f64.ln()]],
            binarize_threshold: 0.0,
            smoothing: 1.0,
        };
        assert_eq!(predict_naive_bayes(&m, &[1.0]).unwrap().0, 0);
        assert!(matches!(
            predict_naive_bayes(&m, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn errors() {
        let single = partition(vec![LabeledRecord::new(vec![1.0], 1)], 1).unwrap();
        assert!(matches!(
            fit_naive_bayes(&single, NaiveBayesVariant::Bernoulli, 1.0, 0.0, &exec(1)),
            Err(Error::SingleClassData)
        ));
        let neg = partition(
            vec![LabeledRecord::new(vec![-1.0], 1), LabeledRecord::new(vec![1.0], 0)],
            1,
        )
        .unwrap();
        assert!(matches!(
            fit_naive_bayes(&neg, NaiveBayesVariant::Multinomial, 1.0, 0.0, &exec(1)),
            Err(Error::NegativeFeature { feature: 0, .. })
        ));
        assert!(fit_naive_bayes(&two_rows(), NaiveBayesVariant::Bernoulli, 0.0, 0.0, &exec(1)).is_err());
    }

    #[test]
    fn multinomial_likelihoods() {
        let rows = vec![
            LabeledRecord::new(vec![2.0, 0.0], 0),
            LabeledRecord::new(vec![1.0, 1.0], 0),
            LabeledRecord::new(vec![0.0, 3.0], 1),
        ];
        let m = fit_naive_bayes(
            &partition(rows, 2).unwrap(),
            NaiveBayesVariant::Multinomial,
            1.0,
            0.0,
            &exec(1),
        )
        .unwrap();
        // class 0 mass (3, 1) -> (4/6, 2/6); class 1 mass (0, 3) -> (1/5, 4/5)
        let theta = |c: usize, j: usize| m.log_likelihoods[c][j].exp();
        assert!((theta(0, 0) - 4.0 / 6.0).abs() < 1e-15);
        assert!((theta(1, 1) - 4.0 / 5.0).abs() < 1e-15);
        assert_eq!(predict_naive_bayes(&m, &[0.0, 5.0]).unwrap().0, 1);
        assert_eq!(predict_naive_bayes(&m, &[5.0, 0.0]).unwrap().0, 0);
    }

    fn random_table(seed: u64, rows: usize, d: usize) -> PartitionedTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut recs: Vec<LabeledRecord> = (0..rows)
            .map(|_| {
                LabeledRecord::new(
                    (0..d).map(|_| rng.random_range(0.0..3.0f64).floor()).collect(),
                    rng.random_range(0..2),
                )
            })
            .collect();
        recs[0].label = 0;
        recs[1].label = 1;
        partition(recs, 8).unwrap()
    }

    #[test]
    fn fitted_model_is_worker_invariant() {
        let t = random_table(5, 300, 4);
        for variant in [NaiveBayesVariant::Bernoulli, NaiveBayesVariant::Multinomial] {
            let base = fit_naive_bayes(&t, variant, 1.0, 0.5, &exec(1)).unwrap();
            for w in [2, 4, 8] {
                assert_eq!(fit_naive_bayes(&t, variant, 1.0, 0.5, &exec(w)).unwrap(), base);
            }
        }
    }

    proptest! {
        #[test]
        fn priors_normalize_and_posteriors_sum_to_one(seed in 0u64..1000, q in proptest::collection::vec(0.0f64..3.0, 4)) {
            let t = random_table(seed, 40, 4);
            let m = fit_naive_bayes(&t, NaiveBayesVariant::Bernoulli, 1.0, 0.5, &exec(1)).unwrap();
            prop_assert!((m.log_priors[0].exp() + m.log_priors[1].exp() - 1.0).abs() <= 1e-12);
            for c in 0..2 {
                for lp in &m.log_likelihoods[c] {
                    let p = lp.exp();
                    prop_assert!(p > 0.0 && p < 1.0);
                }
            }
            let (_, scores) = predict_naive_bayes(&m, &q).unwrap();
            let post = posterior(scores);
            prop_assert!((post[0] + post[1] - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn more_smoothing_moves_toward_half(seed in 0u64..1000, a in 0.1f64..5.0, extra in 0.1f64..5.0) {
            let t = random_table(seed, 30, 3);
            let lo = fit_naive_bayes(&t, NaiveBayesVariant::Bernoulli, a, 0.5, &exec(1)).unwrap();
            let hi = fit_naive_bayes(&t, NaiveBayesVariant::Bernoulli, a + extra, 0.5, &exec(1)).unwrap();
            for c in 0..2 {
                for (l, h) in lo.log_likelihoods[c].iter().zip(&hi.log_likelihoods[c]) {
                    prop_assert!((h.exp() - 0.5).abs() <= (l.exp() - 0.5).abs() + 1e-15);
                }
            }
        }
    }
}
