use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
    "suite": {"templates": [
        {"name": "mix", "continuous": 2, "integer": 1, "categorical": 1, "count": 3},
        {"name": "tree", "continuous": 1, "integer": 0, "categorical": 1, "hierarchical": true, "count": 2}
    ]},
    "design_multiplier": 30,
    "repetitions": 2,
    "encoder": {
        "te_weight": 10.0,
        "shap_n_permutations": 4,
        "shap_background_cap": 30,
        "shap_forest": {"n_trees": 20, "max_depth": null, "min_samples_leaf": 1,
                        "max_features": "all", "bootstrap": true, "seed": 0},
        "seed": 0
    },
    "portfolio": {"budget_multiplier": 20, "repetitions": 5},
    "cv_folds": 5,
    "inner_folds": 2
}"#;

fn mvela(dir: &Path, args: &[&str]) -> Output {
    let config = dir.join("config.json");
    if !config.exists() {
        std::fs::write(&config, SMALL).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_mvela"))
        .args(args)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn full_run_writes_the_report_and_reruns_are_up_to_date() {
    let dir = tempfile::tempdir().unwrap();
    let first = mvela(dir.path(), &["run", "--seed", "3"]);
    assert!(first.status.success(), "{}", stderr(&first));
    let out = dir.path().join("out");
    for file in [
        "suite/manifest.json",
        "bench/performance.csv",
        "features/features_target.csv",
        "features/features_shap.csv",
        "features/features_onehot.csv",
        "select/outcomes.csv",
        "report/report.json",
        "report/table_mean_relert.csv",
    ] {
        assert!(out.join(file).exists(), "missing {file}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report/report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 3);

    let second = mvela(dir.path(), &["run", "--seed", "3"]);
    assert!(second.status.success());
    let log = stderr(&second);
    assert_eq!(log.matches("up to date").count(), 7, "{log}");
}

#[test]
fn a_stage_without_its_inputs_names_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let o = mvela(dir.path(), &["features"]);
    assert!(!o.status.success());
    let log = stderr(&o);
    assert!(log.contains("stage `encode`"), "{log}");
}

#[test]
fn changed_config_is_reported_as_stale() {
    let dir = tempfile::tempdir().unwrap();
    assert!(mvela(dir.path(), &["suite", "--seed", "1"]).status.success());
    let o = mvela(dir.path(), &["sample", "--seed", "2"]);
    assert!(!o.status.success());
    let log = stderr(&o);
    assert!(log.contains("stage `suite`") && log.contains("hash"), "{log}");
}

#[test]
fn unknown_stage_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = mvela(dir.path(), &["run", "--stage", "polish"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("polish"));
}
