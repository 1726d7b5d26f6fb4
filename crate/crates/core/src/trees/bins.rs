use crate::engine::{self, ExecutorConfig, PartitionedTable};

/// Rows sampled per bin when estimating quantile thresholds.
pub const SAMPLE_ROWS_PER_BIN: usize = 10_000;

/// Per-feature split thresholds (at most `max_bins - 1`, strictly increasing).
///
/// Thresholds come from a fixed-stride sample of at most
/// `SAMPLE_ROWS_PER_BIN * max_bins` rows taken in partition-major order. When
/// a feature has at most `max_bins` distinct sampled values the thresholds are
/// the midpoints between consecutive distinct values; otherwise they sit just
/// above the sample quantiles `i / max_bins`.
pub fn compute_bins(table: &PartitionedTable, max_bins: usize, exec: &ExecutorConfig) -> Vec<Vec<f64>> {
    let d = table.feature_count();
    let limit = SAMPLE_ROWS_PER_BIN.saturating_mul(max_bins).max(1);
    let stride = table.total_rows().div_ceil(limit).max(1);
    let offsets: Vec<usize> = table
        .partitions()
        .iter()
        .scan(0, |acc, p| {
            let start = *acc;
            *acc += p.len();
            Some(start)
        })
        .collect();
    let samples = engine::map_partitions(table, exec, |k, rows| {
        let mut cols = vec![Vec::new(); d];
        let start = offsets[k];
        let first = (stride - start % stride) % stride;
        for r in rows.iter().skip(first).step_by(stride) {
            for (col, &v) in cols.iter_mut().zip(&r.features) {
                col.push(v);
            }
        }
        cols
    });
    let mut columns = vec![Vec::new(); d];
    for part in samples {
        for (col, values) in columns.iter_mut().zip(part) {
            col.extend(values);
        }
    }
    columns.into_iter().map(|col| thresholds_for(col, max_bins)).collect()
}

fn midpoint(a: f64, b: f64) -> f64 {
    a + (b - a) / 2.0
}

fn thresholds_for(mut values: Vec<f64>, max_bins: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut distinct = values.clone();
    distinct.dedup();
    if distinct.len() <= max_bins {
        return distinct.windows(2).map(|w| midpoint(w[0], w[1])).collect();
    }
    let m = values.len();
    let mut out: Vec<f64> = Vec::with_capacity(max_bins - 1);
    for i in 1..max_bins {
        let idx = ((i * m).div_ceil(max_bins)).saturating_sub(1).min(m - 1);
        let at = values[idx];
        // smallest distinct value strictly above the quantile
        let pos = distinct.partition_point(|&v| v <= at);
        if pos == distinct.len() {
            continue;
        }
        let t = midpoint(at, distinct[pos]);
        if out.last().is_none_or(|&last| t > last) {
            out.push(t);
        }
    }
    out
}

/// Index of the bin holding `value`: the number of thresholds below it.
#[inline]
pub fn bin_index(thresholds: &[f64], value: f64) -> usize {
    thresholds.partition_point(|&t| t < value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::partition;
    use crate::flowdata::LabeledRecord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table(values: &[f64]) -> PartitionedTable {
        partition(values.iter().map(|&v| LabeledRecord::new(vec![v], 0)).collect(), 3).unwrap()
    }

    #[test]
    fn exact_midpoints() {
        let bins = compute_bins(&table(&[3.0, 1.0, 2.0, 2.0]), 32, &ExecutorConfig::default());
        assert_eq!(bins, vec![vec![1.5, 2.5]]);
    }

    #[test]
    fn constant_feature_has_no_thresholds() {
        let bins = compute_bins(&table(&[4.0; 20]), 32, &ExecutorConfig::default());
        assert_eq!(bins, vec![Vec::<f64>::new()]);
    }

    #[test]
    fn uniform_quartiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let values: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let bins = compute_bins(&table(&values), 4, &ExecutorConfig::default());
        // oracle: exact sample quartiles
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(bins[0].len(), 3);
        for (t, q) in bins[0].iter().zip([0.25, 0.5, 0.75]) {
            let exact = sorted[(q * sorted.len() as f64) as usize];
            assert!((t - exact).abs() < 1e-3);
            assert!((t - q).abs() < 0.05);
        }
    }

    #[test]
    fn thresholds_strictly_increase_with_heavy_ties() {
        let mut values = vec![0.0; 900];
        values.extend((0..100).map(f64::from));
        let bins = compute_bins(&table(&values), 16, &ExecutorConfig::default());
        assert!(bins[0].windows(2).all(|w| w[0] < w[1]));
        assert!(bins[0].len() <= 15);
    }

    #[test]
    fn large_tables_are_sampled_by_stride() {
        let values: Vec<f64> = (0..50_000).map(f64::from).collect();
        let t = table(&values);
        let bins = compute_bins(&t, 2, &ExecutorConfig::default());
        assert_eq!(bins[0].len(), 1);
        assert!((bins[0][0] - 25_000.0).abs() < 100.0);
        let again = compute_bins(&t, 2, &ExecutorConfig::default().with_workers(3));
        assert_eq!(bins, again);
    }

    #[test]
    fn bin_lookup() {
        let t = [1.5, 2.5];
        assert_eq!(bin_index(&t, 1.0), 0);
        assert_eq!(bin_index(&t, 1.5), 0);
        assert_eq!(bin_index(&t, 2.0), 1);
        assert_eq!(bin_index(&t, 9.0), 2);
    }
}
