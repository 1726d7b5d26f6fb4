mod common;

use common::{exact_weighted, to_f64};
use flowforge::metrics::{binary_metrics, weighted_metrics};
use flowforge::ConfusionMatrix;
use proptest::prelude::*;

fn matrices() -> impl Strategy<Value = ConfusionMatrix> {
    (0u64..5000, 0u64..5000, 0u64..5000, 0u64..5000)
        .prop_filter("both classes present", |(tn, fp, fn_, tp)| tn + fp > 0 && fn_ + tp > 0)
        .prop_map(|(tn, fp, fn_, tp)| ConfusionMatrix::new(tn, fp, fn_, tp))
}

proptest! {
    #[test]
    fn weighted_agrees_with_exact_arithmetic(cm in matrices()) {
        let w = weighted_metrics(&cm).unwrap();
        let exact = exact_weighted(cm.tn, cm.fp, cm.fn_, cm.tp);
        prop_assert!((w.precision - to_f64(&exact[0])).abs() < 1e-12);
        prop_assert!((w.recall - to_f64(&exact[1])).abs() < 1e-12);
        prop_assert!((w.f1 - to_f64(&exact[2])).abs() < 1e-12);
    }

    #[test]
    fn weighted_recall_is_accuracy(cm in matrices()) {
        let w = weighted_metrics(&cm).unwrap();
        let acc = binary_metrics(&cm).accuracy.unwrap();
        prop_assert!((w.recall - acc).abs() < 1e-12);
    }

    #[test]
    fn rates_are_complementary(cm in matrices()) {
        let b = binary_metrics(&cm);
        for v in [b.tpr, b.tnr, b.fpr, b.fnr, b.accuracy, b.f1_positive].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if let (Some(tpr), Some(fnr)) = (b.tpr, b.fnr) {
            prop_assert!((tpr + fnr - 1.0).abs() < 1e-12);
        }
        if let (Some(tnr), Some(fpr)) = (b.tnr, b.fpr) {
            prop_assert!((tnr + fpr - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_counts_changes_nothing(cm in matrices(), k in 2u64..50) {
        let scaled = ConfusionMatrix::new(cm.tn * k, cm.fp * k, cm.fn_ * k, cm.tp * k);
        let (a, b) = (weighted_metrics(&cm).unwrap(), weighted_metrics(&scaled).unwrap());
        prop_assert!((a.precision - b.precision).abs() < 1e-12);
        prop_assert!((a.recall - b.recall).abs() < 1e-12);
        prop_assert!((a.f1 - b.f1).abs() < 1e-12);
    }
}
