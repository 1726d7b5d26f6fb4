use std::path::Path;
use std::process::{Command, Output};

fn flowforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowforge"))
        .args(args)
        .env_remove("FLOWFORGE_WORKERS")
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let out = flowforge(&["gen", "--rows", "1000", "--seed", "7", "--out", arg(p)]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 1001);
    assert!(text.starts_with("Dst Port,Fwd Pkt Len Mean,Flow IAT Min,Fwd IAT Tot,Label"));
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let out = flowforge(&["bench", "--rows", "200", "--algo", "knn"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    for name in ["logreg", "svm", "nb", "tree", "forest", "gbt"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn missing_model_is_a_runtime_error() {
    let out = flowforge(&["eval", "--model", "/nonexistent/model.txt", "--rows", "100"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error:"));
}

#[test]
fn train_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("flows.csv");
    let model = dir.path().join("tree.model");
    assert!(
        flowforge(&["gen", "--rows", "3000", "--seed", "2", "--out", arg(&data)])
            .status
            .success()
    );
    let out = flowforge(&[
        "train",
        "--data",
        arg(&data),
        "--algo",
        "tree",
        "--max-depth",
        "7",
        "--max-bins",
        "32",
        "--out",
        arg(&model),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(std::fs::read_to_string(&model)
        .unwrap()
        .starts_with("flowforge-model v1"));

    let out = flowforge(&["eval", "--model", arg(&model), "--data", arg(&data), "--workers", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("F-Measure (w)"), "{report}");
}

#[test]
fn bench_writes_report_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    let out = flowforge(&[
        "bench",
        "--rows",
        "2000",
        "--algo",
        "nb,tree",
        "--workers",
        "1,2",
        "--repeats",
        "1",
        "--out",
        arg(&report),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&report).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("algorithm,workers,repeat,tn,fp,fn,tp,precision,recall,f1,train_seconds")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    // counts agree across worker counts
    for pair in rows.chunks(2) {
        assert_eq!(pair[0][0], pair[1][0]);
        assert_eq!(pair[0][3..7], pair[1][3..7]);
    }
    let series = std::fs::read_to_string(dir.path().join("report_nb_series.csv")).unwrap();
    assert!(series.starts_with("workers,seconds\n1,"));
}

#[test]
fn workers_default_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_flowforge"))
        .args([
            "bench",
            "--rows",
            "500",
            "--algo",
            "nb",
            "--repeats",
            "1",
            "--out",
            arg(&report),
        ])
        .env("FLOWFORGE_WORKERS", "3")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("nb,3,0,"), "{text}");
}
