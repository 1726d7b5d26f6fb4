use super::impurity::LabelHistogram;
use super::TreeConfig;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitCandidate {
    pub feature_index: usize,
    /// Rows with `value <= threshold` go left.
    pub threshold: f64,
    /// Last bin on the left side.
    pub bin: usize,
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ScoredSplit<H> {
    pub candidate: SplitCandidate,
    pub left: H,
    pub right: H,
}

/// Best split of a node given its per-feature, per-bin histograms.
///
/// `node_stats[f]` holds `thresholds[f].len() + 1` bins. A candidate is
/// admitted when both children carry at least `min_rows_per_node` rows and
/// its gain is positive and at least `min_info_gain`. Equal gains keep the
/// lowest feature index, then the lowest threshold.
pub fn best_split<H: LabelHistogram>(
    node_stats: &[Vec<H>],
    thresholds: &[Vec<f64>],
    parent: &H,
    cfg: &TreeConfig,
) -> Option<SplitCandidate> {
    let features: Vec<usize> = (0..node_stats.len()).collect();
    best_split_among(&features, |f| &node_stats[f], thresholds, parent, cfg).map(|s| s.candidate)
}

pub(crate) fn best_split_among<'a, H, F>(
    features: &[usize],
    bins_of: F,
    thresholds: &[Vec<f64>],
    parent: &H,
    cfg: &TreeConfig,
) -> Option<ScoredSplit<H>>
where
    H: LabelHistogram + 'a,
    F: Fn(usize) -> &'a [H],
{
    let n = parent.weight();
    let min_rows = cfg.min_rows_per_node.max(1) as f64;
    if n < min_rows {
        return None;
    }
    let parent_impurity = parent.impurity(cfg.impurity).ok()?;
    if parent_impurity == 0.0 {
        return None;
    }
    let mut best: Option<ScoredSplit<H>> = None;
    let mut suffix: Vec<H> = Vec::new();
    for &f in features {
        let bins = bins_of(f);
        let cuts = thresholds[f].len();
        if cuts == 0 {
            continue;
        }
        debug_assert_eq!(bins.len(), cuts + 1);
        // suffix[b] = bins[b..] combined, so each side is a plain running sum
        suffix.clear();
        suffix.resize(cuts + 2, H::default());
        for b in (0..=cuts).rev() {
            let mut acc = suffix[b + 1].clone();
            acc.merge(&bins[b]);
            suffix[b] = acc;
        }
        let mut left = H::default();
        for b in 0..cuts {
            left.merge(&bins[b]);
            let right = &suffix[b + 1];
            let (nl, nr) = (left.weight(), right.weight());
            if nl < min_rows || nr < min_rows {
                continue;
            }
            let (Ok(il), Ok(ir)) = (left.impurity(cfg.impurity), right.impurity(cfg.impurity)) else {
                continue;
            };
            let gain = parent_impurity - (nl / n) * il - (nr / n) * ir;
            if !(gain > 0.0 && gain >= cfg.min_info_gain) {
                continue;
            }
            if best.as_ref().is_none_or(|s| gain > s.candidate.gain) {
                best = Some(ScoredSplit {
                    candidate: SplitCandidate {
                        feature_index: f,
                        threshold: thresholds[f][b],
                        bin: b,
                        gain,
                    },
                    left: left.clone(),
                    right: right.clone(),
                });
            }
        }
    }
    best
}
