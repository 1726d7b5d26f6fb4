use crate::engine::{self, ExecutorConfig, PartitionedTable};
use crate::error::{Error, Result};
use crate::linear::{sigmoid, SigmoidParams};

use super::grow::{grow, BinnedTable, GrowInputs};
use super::{check_table, GbtModel, ImpurityKind, MomentHistogram, TreeConfig};

pub const DEFAULT_STAGES: usize = 50;
pub const DEFAULT_LEARNING_RATE: f64 = 0.1;

/// Gradient boosting on logistic loss. Each stage fits a variance tree to
/// the pseudo-residuals `y - sigmoid(F)` and adds it scaled by
/// `learning_rate`. `cfg.impurity` is ignored.
pub fn fit_gbt(
    table: &PartitionedTable,
    cfg: &TreeConfig,
    n_stages: usize,
    learning_rate: f64,
    exec: &ExecutorConfig,
) -> Result<GbtModel> {
    cfg.validate()?;
    check_table(table)?;
    if n_stages == 0 {
        return Err(Error::InvalidConfig("n_stages must be at least 1".into()));
    }
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "learning_rate must be positive, got {learning_rate}"
        )));
    }
    let [benign, bot] = table.class_counts();
    if benign == 0 || bot == 0 {
        return Err(Error::SingleClassData);
    }
    let init = (bot as f64 / benign as f64).ln();
    let cfg = TreeConfig {
        impurity: ImpurityKind::Variance,
        ..cfg.clone()
    };
    let binned = BinnedTable::build(table, cfg.max_bins, exec);
    let all: Vec<usize> = (0..table.feature_count()).collect();
    let residual = |label: u8, f: f64| f64::from(label) - sigmoid(f, SigmoidParams::STANDARD);

    let mut scores: Vec<Vec<f64>> = table.partitions().iter().map(|p| vec![init; p.len()]).collect();
    let mut residuals: Vec<Vec<f64>> = table
        .partitions()
        .iter()
        .map(|p| p.iter().map(|r| residual(r.label, init)).collect())
        .collect();
    let mut trees = Vec::with_capacity(n_stages);
    for _ in 0..n_stages {
        let inputs = GrowInputs {
            table,
            binned: &binned,
            weights: None,
            targets: Some(&residuals),
        };
        let tree = grow::<MomentHistogram, _>(&inputs, &cfg, exec, |_| all.clone())?;
        let updated = engine::map_partitions(table, exec, |k, rows| {
            let mut f = scores[k].clone();
            let mut r = Vec::with_capacity(rows.len());
            for (fi, row) in f.iter_mut().zip(rows) {
                *fi += learning_rate * tree.value_unchecked(&row.features);
                r.push(residual(row.label, *fi));
            }
            (f, r)
        });
        for (k, (f, r)) in updated.into_iter().enumerate() {
            scores[k] = f;
            residuals[k] = r;
        }
        trees.push(tree);
    }
    Ok(GbtModel {
        init,
        learning_rate,
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::partition;
    use crate::flowdata::{generate_synthetic, LabeledRecord};

    #[test]
    fn separable_line_is_learned() {
        let records: Vec<LabeledRecord> = (0..40)
            .map(|i| LabeledRecord::new(vec![f64::from(i)], u8::from(i >= 25)))
            .collect();
        let table = partition(records.clone(), 4).unwrap();
        let model = fit_gbt(&table, &TreeConfig::default(), 5, 0.5, &ExecutorConfig::default()).unwrap();
        for r in &records {
            assert_eq!(model.predict(&r.features).unwrap().0, r.label);
        }
        assert!((model.init - (15.0f64 / 25.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let (records, _) = generate_synthetic(400, 1, 0.3, 2).unwrap();
        let table = partition(records.clone(), 4).unwrap();
        let cfg = TreeConfig {
            max_depth: 3,
            ..TreeConfig::default()
        };
        let a = fit_gbt(&table, &cfg, 4, 0.1, &ExecutorConfig::default()).unwrap();
        let b = fit_gbt(&table, &cfg, 4, 0.1, &ExecutorConfig::default().with_workers(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn contract_errors() {
        let table = partition(
            vec![LabeledRecord::new(vec![1.0], 0), LabeledRecord::new(vec![2.0], 1)],
            1,
        )
        .unwrap();
        let exec = ExecutorConfig::default();
        assert!(matches!(
            fit_gbt(&table, &TreeConfig::default(), 0, 0.1, &exec),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            fit_gbt(&table, &TreeConfig::default(), 1, 0.0, &exec),
            Err(Error::InvalidConfig(_))
        ));
        let single = partition(vec![LabeledRecord::new(vec![1.0], 1)], 1).unwrap();
        assert!(matches!(
            fit_gbt(&single, &TreeConfig::default(), 1, 0.1, &exec),
            Err(Error::SingleClassData)
        ));
    }
}
