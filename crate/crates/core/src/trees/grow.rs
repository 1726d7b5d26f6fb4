//! Level-order tree growth over a binned, partitioned table.
//!
//! Each level is one pass: every partition routes its rows one step down the
//! tree (following the splits chosen at the previous level) and accumulates
//! `node x feature x bin` histograms for the current frontier. The driver
//! merges those histograms along the engine's combine tree and picks splits.

use crate::engine::{self, ExecutorConfig, PartitionedTable};
use crate::error::Result;

use super::bins::{bin_index, compute_bins};
use super::impurity::LabelHistogram;
use super::model::{TreeModel, TreeNode};
use super::split::best_split_among;
use super::TreeConfig;

const NO_SLOT: u32 = u32::MAX;

/// Bin codes for every row plus the thresholds they were derived from.
pub(crate) struct BinnedTable {
    pub thresholds: Vec<Vec<f64>>,
    offsets: Vec<usize>,
    total_bins: usize,
    width: usize,
    /// Row-major codes per partition.
    codes: Vec<Vec<u16>>,
}

impl BinnedTable {
    pub fn build(table: &PartitionedTable, max_bins: usize, exec: &ExecutorConfig) -> Self {
        let thresholds = compute_bins(table, max_bins, exec);
        let width = thresholds.len();
        let mut offsets = Vec::with_capacity(width);
        let mut total_bins = 0;
        for t in &thresholds {
            offsets.push(total_bins);
            total_bins += t.len() + 1;
        }
        let codes = engine::map_partitions(table, exec, |_, rows| {
            let mut out = Vec::with_capacity(rows.len() * width);
            for r in rows {
                out.extend(r.features.iter().zip(&thresholds).map(|(&v, t)| bin_index(t, v) as u16));
            }
            out
        });
        Self {
            thresholds,
            offsets,
            total_bins,
            width,
            codes,
        }
    }
}

pub(crate) struct GrowInputs<'a> {
    pub table: &'a PartitionedTable,
    pub binned: &'a BinnedTable,
    /// Per-row integer weights (bootstrap); 1 when absent.
    pub weights: Option<&'a [Vec<u32>]>,
    /// Per-row regression targets; labels are used when absent.
    pub targets: Option<&'a [Vec<f64>]>,
}

#[derive(Clone, Copy)]
struct Route {
    feature: usize,
    bin: usize,
    left: u32,
    right: u32,
}

struct PassOutput<H> {
    assignments: Vec<u32>,
    hist: Vec<H>,
    totals: Vec<H>,
}

fn merge_all<H: LabelHistogram>(mut a: Vec<H>, b: Vec<H>) -> Vec<H> {
    for (x, y) in a.iter_mut().zip(&b) {
        x.merge(y);
    }
    a
}

/// Grows one tree. `features_for(node_id)` lists the features a node may
/// split on, in ascending order.
pub(crate) fn grow<H, F>(
    inputs: &GrowInputs<'_>,
    cfg: &TreeConfig,
    exec: &ExecutorConfig,
    features_for: F,
) -> Result<TreeModel>
where
    H: LabelHistogram,
    F: Fn(usize) -> Vec<usize>,
{
    let GrowInputs {
        table,
        binned,
        weights,
        targets,
    } = *inputs;
    let width = binned.width;
    let total_bins = binned.total_bins;
    let min_rows = cfg.min_rows_per_node.max(1) as f64;

    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf {
        value: 0.0,
        stats: Vec::new(),
    }];
    let mut assignments: Vec<Vec<u32>> = table.partitions().iter().map(|p| vec![0; p.len()]).collect();
    let mut routes: Vec<Option<Route>> = vec![None];
    let mut frontier: Vec<(usize, usize)> = vec![(0, 0)];
    let mut max_depth_used = 0;

    while !frontier.is_empty() {
        let mut slot = vec![NO_SLOT; nodes.len()];
        for (s, &(node, _)) in frontier.iter().enumerate() {
            slot[node] = s as u32;
        }
        let k_nodes = frontier.len();
        let outputs = engine::map_partitions(table, exec, |k, rows| {
            let mut assign = assignments[k].clone();
            let mut hist = vec![H::default(); k_nodes * total_bins];
            let mut totals = vec![H::default(); k_nodes];
            let codes = &binned.codes[k];
            for (i, r) in rows.iter().enumerate() {
                let row_codes = &codes[i * width..(i + 1) * width];
                let mut node = assign[i] as usize;
                if let Some(route) = routes[node] {
                    let next = if (row_codes[route.feature] as usize) <= route.bin {
                        route.left
                    } else {
                        route.right
                    };
                    assign[i] = next;
                    node = next as usize;
                }
                let s = slot[node];
                if s == NO_SLOT {
                    continue;
                }
                let w = weights.map_or(1, |w| w[k][i]);
                if w == 0 {
                    continue;
                }
                let target = targets.map_or(0.0, |t| t[k][i]);
                let s = s as usize;
                totals[s].add_sample(r.label, target, w);
                let base = s * total_bins;
                for (f, &code) in row_codes.iter().enumerate() {
                    hist[base + binned.offsets[f] + code as usize].add_sample(r.label, target, w);
                }
            }
            PassOutput {
                assignments: assign,
                hist,
                totals,
            }
        });

        let mut partials = Vec::with_capacity(outputs.len());
        for (k, out) in outputs.into_iter().enumerate() {
            assignments[k] = out.assignments;
            partials.push((out.hist, out.totals));
        }
        let (hist, totals) =
            engine::combine_tree(partials, |(h1, t1), (h2, t2)| (merge_all(h1, h2), merge_all(t1, t2)))
                .expect("table has partitions");

        routes = vec![None; nodes.len()];
        let mut next_frontier = Vec::new();
        for (s, &(node, depth)) in frontier.iter().enumerate() {
            let stats = &totals[s];
            let leaf = TreeNode::Leaf {
                value: stats.leaf_value(),
                stats: stats.summary(),
            };
            if depth >= cfg.max_depth || stats.is_pure() {
                nodes[node] = leaf;
                continue;
            }
            let base = s * total_bins;
            let bins_of = |f: usize| {
                let start = base + binned.offsets[f];
                &hist[start..start + binned.thresholds[f].len() + 1]
            };
            let allowed = features_for(node);
            let Some(split) = best_split_among(&allowed, bins_of, &binned.thresholds, stats, cfg) else {
                nodes[node] = leaf;
                continue;
            };
            let left = nodes.len();
            let right = left + 1;
            for (child, child_stats) in [(left, &split.left), (right, &split.right)] {
                nodes.push(TreeNode::Leaf {
                    value: child_stats.leaf_value(),
                    stats: child_stats.summary(),
                });
                routes.push(None);
                let splittable =
                    depth + 1 < cfg.max_depth && !child_stats.is_pure() && child_stats.weight() >= 2.0 * min_rows;
                if splittable {
                    next_frontier.push((child, depth + 1));
                }
            }
            nodes[node] = TreeNode::Split {
                feature: split.candidate.feature_index,
                threshold: split.candidate.threshold,
                left,
                right,
                stats: stats.summary(),
            };
            routes[node] = Some(Route {
                feature: split.candidate.feature_index,
                bin: split.candidate.bin,
                left: left as u32,
                right: right as u32,
            });
            max_depth_used = max_depth_used.max(depth + 1);
        }
        frontier = next_frontier;
    }

    Ok(TreeModel {
        nodes,
        max_depth_used,
        impurity: cfg.impurity,
        feature_count: width,
    })
}
