mod common;

use common::{exec, table};
use flowforge::linear::{fit_svm, objective_and_gradient, predict_linear, GdConfig, LinearKind, Standardizer};
use flowforge::LabeledRecord;
use rand::Rng;

fn rows(n: usize, d: usize, seed: u64) -> Vec<LabeledRecord> {
    let mut rng = common::rng(seed);
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let label = u8::from(x.iter().sum::<f64>() + rng.random_range(-1.0..1.0) > 0.0);
            LabeledRecord::new(x, label)
        })
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Central differences of the objective; `h` is small next to the data scale.
fn check(kind: LinearKind) {
    let d = 3;
    let t = table(rows(50, d, 17), 4);
    let std = Standardizer::identity(d);
    let e = exec(2);
    let mut rng = common::rng(99);
    let h = 1e-6;
    for _ in 0..20 {
        let p: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, grad) = objective_and_gradient(kind, &t, &std, &p, 1e-2, &e);
        for j in 0..=d {
            let mut up = p.clone();
            let mut down = p.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (objective_and_gradient(kind, &t, &std, &up, 1e-2, &e).0
                - objective_and_gradient(kind, &t, &std, &down, 1e-2, &e).0)
                / (2.0 * h);
            assert!(
                rel_err(grad[j], fd) <= 1e-5,
                "{kind:?} coordinate {j}: analytic {} vs numeric {fd}",
                grad[j]
            );
        }
    }
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    check(LinearKind::Logistic);
}

#[test]
fn hinge_gradient_matches_finite_differences() {
    check(LinearKind::Svm);
}

#[test]
fn scaling_weights_keeps_svm_labels() {
    let data = rows(200, 3, 4);
    let mut model = fit_svm(&table(data.clone(), 4), &GdConfig::default(), &exec(1)).unwrap();
    let before: Vec<u8> = data
        .iter()
        .map(|r| predict_linear(&model, &r.features).unwrap().0)
        .collect();
    for c in [0.01, 3.0, 250.0] {
        let mut scaled = model.clone();
        scaled.weights.iter_mut().for_each(|w| *w *= c);
        scaled.intercept *= c;
        let after: Vec<u8> = data
            .iter()
            .map(|r| predict_linear(&scaled, &r.features).unwrap().0)
            .collect();
        assert_eq!(before, after);
    }
    model.weights.clear();
    assert!(predict_linear(&model, &data[0].features).is_err());
}
