use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"{
  "cohort": { "n_patients": 200 },
  "train": { "epochs": 2 },
  "protocol": { "n_splits": 2, "eval_splits": 1, "k_folds": 3, "record_runtime": false },
  "experiments": { "versions": ["v3"], "directions": ["undirected"], "archs": ["sage"], "variants": ["1"] }
}"#;

fn pkgraph(dir: &Path, args: &[&str]) -> Output {
    let config = dir.join("config.json");
    if !config.exists() {
        fs::write(&config, CONFIG).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_pkgraph"))
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.join("work"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn full_chain_emits_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = pkgraph(dir.path(), &["--seed", "3", "run"]);
    ok(&out);
    let work = dir.path().join("work");
    let runs = work.join("results/runs");
    let csv = fs::read_to_string(runs.join("PKGSage-variant1_v3_undirected.csv")).unwrap();
    assert!(csv.starts_with("config,version,direction,split,fold,seed,accuracy,f1,runtime_s"));
    assert_eq!(csv.lines().count(), 1 + 3);
    assert!(runs.join("baselines.csv").exists());
    assert!(work.join("results/report.txt").exists());
    assert!(work.join("models/PKGSage-variant1_v3_undirected.checkpoint.json").exists());
    assert!(work.join("manifests/train.json").exists());
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("PKGSage-variant1") && report.contains("AdaBoost"), "{report}");
}

#[test]
fn transform_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for stage in ["generate", "preprocess", "build-graphs", "transform"] {
        ok(&pkgraph(dir.path(), &[stage]));
    }
    let file = dir.path().join("work/numeric/v3_undirected.jsonl");
    let first = fs::read(&file).unwrap();
    let vocab = fs::read(dir.path().join("work/numeric/vocab.json")).unwrap();
    ok(&pkgraph(dir.path(), &["transform"]));
    assert_eq!(fs::read(&file).unwrap(), first);
    assert_eq!(fs::read(dir.path().join("work/numeric/vocab.json")).unwrap(), vocab);
}

#[test]
fn ablate_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
      "cohort": { "n_patients": 120 },
      "train": { "epochs": 1 },
      "protocol": { "n_splits": 2, "eval_splits": 1, "k_folds": 2, "record_runtime": false },
      "ablation": { "facet_sets": [["social"], ["diseases", "medication"]] }
    }"#;
    fs::write(dir.path().join("config.json"), config).unwrap();
    for stage in ["generate", "preprocess", "build-graphs", "transform", "ablate"] {
        ok(&pkgraph(dir.path(), &["--version", "v3", "--direction", "undirected", stage]));
    }
    let table = fs::read_to_string(dir.path().join("work/results/ablation.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 3 * 2, "{table}");
}

#[test]
fn unknown_version_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = pkgraph(dir.path(), &["--version", "v9", "transform"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("v9"));
}

#[test]
fn missing_artifact_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = pkgraph(dir.path(), &["train"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("transform"), "{stderr}");
}

#[test]
fn bad_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.json"), r#"{ "train": { "learning_rate": -1 } }"#).unwrap();
    let out = pkgraph(dir.path(), &["generate"]);
    assert_eq!(out.status.code(), Some(3));
}
