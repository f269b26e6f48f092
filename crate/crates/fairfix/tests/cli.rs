//! End-to-end tests of the `fairfix` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fairfix::csv_io::save_csv;
use fairfix::model_io::save_model;
use fairfix::synth::{planted_dataset, planted_model, reader_model, table_dataset, TABLE_SAME};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairfix"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    model: PathBuf,
    data: PathBuf,
    test: PathBuf,
    out: PathBuf,
}

/// Planted-bias model and datasets written to disk.
fn planted_fixture(seed: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let model = root.join("model.json");
    let data = root.join("rep.csv");
    let test = root.join("test.csv");
    let out = root.join("out");
    save_model(&planted_model(1.5), &model).unwrap();
    save_csv(&planted_dataset(400, seed), &data).unwrap();
    save_csv(&planted_dataset(200, seed + 1000), &test).unwrap();
    Fixture {
        _dir: dir,
        root,
        model,
        data,
        test,
        out,
    }
}

/// The ten-row worked-example table with a model that reproduces its
/// predictions.
fn table_fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let model = root.join("model.json");
    let data = root.join("rep.csv");
    let out = root.join("out");
    save_model(&reader_model(), &model).unwrap();
    save_csv(&table_dataset(&TABLE_SAME, "gender", "gender"), &data).unwrap();
    Fixture {
        _dir: dir,
        root,
        model,
        data: data.clone(),
        test: data,
        out,
    }
}

fn read_report(out: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(out.join("report.json")).expect("report exists");
    serde_json::from_str(&text).expect("report parses")
}

fn strip_timings(mut value: serde_json::Value) -> serde_json::Value {
    value.as_object_mut().unwrap().remove("timings");
    value
}

#[test]
fn evaluate_reports_table_accuracy() {
    let fx = table_fixture();
    let output = run(&[
        "evaluate",
        "--model",
        fx.model.to_str().unwrap(),
        "--data",
        fx.data.to_str().unwrap(),
        "--label",
        "gender",
        "--sensitive",
        "gender",
        "--out",
        fx.out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let report = read_report(&fx.out);
    assert_eq!(report["fairness"]["repair"]["accuracy_overall"], 0.6);
    assert_eq!(report["fairness"]["repair"]["deprived_group"], 0);
    assert_eq!(report["fairness"]["test"], serde_json::Value::Null);
    assert_eq!(report["config"]["setting"], "same_attribute");
}

#[test]
fn evaluate_is_deterministic_apart_from_timings() {
    let fx = table_fixture();
    let args = [
        "evaluate",
        "--model",
        fx.model.to_str().unwrap(),
        "--data",
        fx.data.to_str().unwrap(),
        "--label",
        "gender",
        "--sensitive",
        "gender",
    ];
    let out_a = fx.root.join("out_a");
    let out_b = fx.root.join("out_b");
    assert!(bin()
        .args(args)
        .arg("--out")
        .arg(&out_a)
        .output()
        .unwrap()
        .status
        .success());
    assert!(bin()
        .args(args)
        .arg("--out")
        .arg(&out_b)
        .output()
        .unwrap()
        .status
        .success());
    let a = strip_timings(read_report(&out_a));
    let mut b = strip_timings(read_report(&out_b));
    // the echoed output directory differs by construction
    b["config"]["out"] = a["config"]["out"].clone();
    assert_eq!(a, b);
}

#[test]
fn localize_finds_the_planted_weight() {
    let fx = planted_fixture(31);
    let output = run(&[
        "localize",
        "--model",
        fx.model.to_str().unwrap(),
        "--data",
        fx.data.to_str().unwrap(),
        "--label",
        "label",
        "--sensitive",
        "sensitive",
        "--seed",
        "31",
        "--out",
        fx.out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let report = read_report(&fx.out);
    assert_eq!(report["config"]["setting"], "different_attribute");
    let front = report["localization"]["pareto"].as_array().unwrap();
    assert!(
        front
            .iter()
            .any(|c| c["layer"] == 1 && c["row"] == 1 && c["col"] == 0),
        "front: {front:?}"
    );
    // score table only with --full-scores
    assert_eq!(report["localization"]["scored"], serde_json::Value::Null);
}

#[test]
fn localize_warns_on_accurate_model_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("model.json");
    let data_path = dir.path().join("rep.csv");
    let out = dir.path().join("out");
    save_model(&planted_model(0.0), &model_path).unwrap();
    // noise-free group feature far from the decision boundary
    let samples: Vec<fairfix_core::dataset::LabeledSample> = (0..40)
        .map(|i| {
            let s = (i % 2) as u8;
            let x0 = if i % 3 == 0 {
                -1.0 - (i as f64) * 0.01
            } else {
                1.0 + (i as f64) * 0.01
            };
            let y = (x0 > 0.0) as u8;
            fairfix_core::dataset::LabeledSample::new(
                vec![x0, if s == 1 { 1.0 } else { -1.0 }],
                y,
                s,
            )
        })
        .collect();
    let ds = fairfix_core::dataset::LabeledDataset::from_rows(samples, 2).unwrap();
    save_csv(&ds, &data_path).unwrap();
    let output = run(&[
        "localize",
        "--model",
        model_path.to_str().unwrap(),
        "--data",
        data_path.to_str().unwrap(),
        "--label",
        "label",
        "--sensitive",
        "sensitive",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("nothing to localize"));
    let report = read_report(&out);
    assert_eq!(report["localization"]["nothing_to_localize"], true);
    assert_eq!(
        report["localization"]["pareto"].as_array().unwrap().len(),
        0
    );
}

#[test]
fn invalid_layer_fails_without_writing_a_report() {
    let fx = planted_fixture(5);
    let output = run(&[
        "localize",
        "--model",
        fx.model.to_str().unwrap(),
        "--data",
        fx.data.to_str().unwrap(),
        "--label",
        "label",
        "--sensitive",
        "sensitive",
        "--layer",
        "7",
        "--out",
        fx.out.to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("layer"));
    assert!(!fx.out.join("report.json").exists());
}

#[test]
fn missing_model_file_fails_cleanly() {
    let fx = planted_fixture(6);
    let output = run(&[
        "repair",
        "--model",
        fx.root.join("absent.json").to_str().unwrap(),
        "--data",
        fx.data.to_str().unwrap(),
        "--label",
        "label",
        "--sensitive",
        "sensitive",
        "--out",
        fx.out.to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    assert!(!fx.out.join("report.json").exists());
    assert!(!fx.out.join("patched_model.json").exists());
}

#[test]
fn repair_writes_patched_model_and_never_degrades() {
    let fx = planted_fixture(41);
    let output = run(&[
        "repair",
        "--model",
        fx.model.to_str().unwrap(),
        "--data",
        fx.data.to_str().unwrap(),
        "--test",
        fx.test.to_str().unwrap(),
        "--label",
        "label",
        "--sensitive",
        "sensitive",
        "--metric",
        "spd",
        "--particles",
        "30",
        "--generations",
        "30",
        "--seed",
        "41",
        "--out",
        fx.out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let report = read_report(&fx.out);
    let before = report["repair"]["before_repair"]["spd"].as_f64().unwrap();
    let after = report["repair"]["after_repair"]["spd"].as_f64().unwrap();
    assert!(after <= before);
    assert!(report["repair"]["before_test"].is_object());
    let model_path = PathBuf::from(report["repair"]["patched_model_path"].as_str().unwrap());
    assert!(model_path.exists());
    fairfix::model_io::load_model(&model_path).expect("patched model loads");
}

#[test]
fn batch_runs_emit_reports_per_seed_and_a_summary() {
    let fx = planted_fixture(51);
    let output = run(&[
        "repair",
        "--model",
        fx.model.to_str().unwrap(),
        "--data",
        fx.data.to_str().unwrap(),
        "--label",
        "label",
        "--sensitive",
        "sensitive",
        "--particles",
        "20",
        "--generations",
        "10",
        "--seed",
        "100",
        "--runs",
        "3",
        "--out",
        fx.out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    for seed in 100..103 {
        assert!(fx.out.join(format!("report_seed{seed}.json")).exists());
        assert!(fx
            .out
            .join(format!("patched_model_seed{seed}.json"))
            .exists());
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fx.out.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["metric"], "spd");
    assert_eq!(summary["runs"].as_array().unwrap().len(), 3);
}

#[test]
fn config_file_supplies_values_and_flags_override() {
    let fx = planted_fixture(61);
    let config_path = fx.root.join("run.json");
    std::fs::write(
        &config_path,
        serde_json::json!({
            "model": fx.model,
            "data": fx.data,
            "label": "label",
            "sensitive": "sensitive",
            "seed": 7,
            "particles": 25,
            "out": fx.out,
        })
        .to_string(),
    )
    .unwrap();
    let output = run(&[
        "localize",
        "--config",
        config_path.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let report = read_report(&fx.out);
    // flag wins over config file
    assert_eq!(report["config"]["seed"], 9);
    assert_eq!(report["config"]["particles"], 25);
}

#[test]
fn unknown_metric_is_rejected() {
    let fx = planted_fixture(71);
    let output = run(&[
        "evaluate",
        "--model",
        fx.model.to_str().unwrap(),
        "--data",
        fx.data.to_str().unwrap(),
        "--label",
        "label",
        "--sensitive",
        "sensitive",
        "--metric",
        "parity",
        "--out",
        fx.out.to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("parity"));
}
