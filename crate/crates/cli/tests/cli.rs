//! CLI behavior: subcommand semantics, exit codes, byte-determinism.

use std::fs;
use std::path::Path;
use std::process::Command;

use logmend_cli::run;

fn fixture() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/order_process.json")
}

fn s(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let code = run([
            "generate", "--spec", fixture(), "--traces", "20", "--seed", "9", "--out", &s(out),
        ]);
        assert_eq!(code, 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn mask_odd_blanks_rows_one_and_three() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    // One 5-event trace.
    fs::write(
        &log,
        "case_id,activity,timestamp\n\
         c1,A,2024-01-01 00:00:00\n\
         c1,B,2024-01-01 00:00:01\n\
         c1,C,2024-01-01 00:00:02\n\
         c1,D,2024-01-01 00:00:03\n\
         c1,E,2024-01-01 00:00:04\n",
    )
    .unwrap();
    let out = dir.path().join("damaged.csv");
    let code = run(["mask", &s(&log), &s(&out), "--strategy", "odd", "--seed", "123"]);
    assert_eq!(code, 0);

    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows[1], "c1,-,-");
    assert_eq!(rows[3], "c1,-,-");
    for (kept, activity) in [(0, "A"), (2, "C"), (4, "E")] {
        let cells: Vec<&str> = rows[kept].split(',').collect();
        assert_eq!(cells[1], activity, "row {kept} must be intact: {}", rows[kept]);
        assert_ne!(cells[2], "-");
    }
}

#[test]
fn unknown_strategy_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    fs::write(&log, "case_id,activity,timestamp\nc1,A,2024-01-01 00:00:00\n").unwrap();
    let out = dir.path().join("out.csv");
    let code = run(["mask", &s(&log), &s(&out), "--strategy", "diagonal"]);
    assert_eq!(code, 1);
    assert!(!out.exists(), "no partial output on validation failure");
}

#[test]
fn missing_input_is_a_validation_error() {
    let code = run(["generate", "--spec", "no_such_spec.json", "--traces", "5", "--out", "x.csv"]);
    assert_eq!(code, 1);
}

#[test]
fn repair_of_a_complete_log_is_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let artifacts = dir.path().join("artifacts");
    assert_eq!(
        run(["generate", "--spec", fixture(), "--traces", "30", "--seed", "4", "--out", &s(&log)]),
        0
    );
    assert_eq!(
        run([
            "train", "--log", &s(&log), "--learning-rate", "0.02", "--batch-size", "64",
            "--hidden", "8", "--layers", "1", "--max-epochs", "2", "--patience", "0",
            "--seed", "4", "--out-dir", &s(&artifacts),
        ]),
        0
    );
    let out = dir.path().join("repaired.csv");
    assert_eq!(
        run(["repair", "--log", &s(&log), "--artifacts", &s(&artifacts), "--out", &s(&out)]),
        0
    );
    assert_eq!(fs::read(&log).unwrap(), fs::read(&out).unwrap());
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_logmend");
    let unknown = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(unknown.status.code(), Some(1));

    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("generate"));

    let missing = Command::new(bin)
        .args(["repair", "--log", "absent.csv", "--artifacts", "nowhere", "--out", "o.csv"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn train_writes_all_three_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let artifacts = dir.path().join("artifacts");
    assert_eq!(
        run(["generate", "--spec", fixture(), "--traces", "25", "--seed", "1", "--out", &s(&log)]),
        0
    );
    assert_eq!(
        run([
            "train", "--log", &s(&log), "--hidden", "8", "--layers", "1", "--max-epochs", "2",
            "--patience", "0", "--batch-size", "32", "--out-dir", &s(&artifacts),
        ]),
        0
    );
    assert!(artifacts.join("params.bin").is_file());
    assert!(artifacts.join("encoders.json").is_file());
    let history = fs::read_to_string(artifacts.join("history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,val_loss"));
    assert_eq!(history.lines().count(), 3); // header + 2 epochs

    let params = fs::read(artifacts.join("params.bin")).unwrap();
    assert_eq!(&params[..4], b"SGRF");
}

#[test]
fn train_artifacts_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    assert_eq!(
        run(["generate", "--spec", fixture(), "--traces", "20", "--seed", "8", "--out", &s(&log)]),
        0
    );
    for name in ["first", "second"] {
        let out = dir.path().join(name);
        assert_eq!(
            run([
                "train", "--log", &s(&log), "--hidden", "8", "--layers", "1", "--max-epochs", "2",
                "--patience", "0", "--batch-size", "32", "--seed", "8", "--out-dir", &s(&out),
            ]),
            0
        );
    }
    for artifact in ["params.bin", "encoders.json", "history.csv"] {
        let first = fs::read(dir.path().join("first").join(artifact)).unwrap();
        let second = fs::read(dir.path().join("second").join(artifact)).unwrap();
        assert_eq!(first, second, "{artifact} differs between identical runs");
    }
}

#[test]
fn evaluate_pipeline_produces_a_parseable_report() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let damaged = dir.path().join("damaged.csv");
    let artifacts = dir.path().join("artifacts");
    let report = dir.path().join("report.json");
    assert_eq!(
        run(["generate", "--spec", fixture(), "--traces", "40", "--seed", "3", "--out", &s(&log)]),
        0
    );
    assert_eq!(
        run(["mask", &s(&log), &s(&damaged), "--strategy", "even", "--seed", "3"]),
        0
    );
    assert_eq!(
        run([
            "train", "--log", &s(&log), "--hidden", "8", "--layers", "1", "--max-epochs", "2",
            "--patience", "0", "--batch-size", "64", "--seed", "3", "--out-dir", &s(&artifacts),
        ]),
        0
    );
    let history_dir = dir.path().join("histories");
    assert_eq!(
        run([
            "evaluate", "--log", &s(&log), "--runs", "2", "--hidden", "8", "--layers", "1",
            "--max-epochs", "2", "--seed", "3", "--out", &s(&report),
            "--history-dir", &s(&history_dir),
        ]),
        0
    );

    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let even_activity = &value["even"]["activity"];
    assert_eq!(even_activity["metric"], "accuracy");
    assert!(even_activity["mean"].as_f64().is_some());
    assert_eq!(even_activity["runs"].as_array().unwrap().len(), 2);

    for run_idx in 0..2 {
        let history = history_dir.join(format!("history_run{run_idx:02}.csv"));
        let text = fs::read_to_string(&history).unwrap();
        assert!(text.starts_with("epoch,train_loss,val_loss"));
    }
}

#[test]
fn train_honors_the_tuned_aggregator() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let config = dir.path().join("best.json");
    let artifacts = dir.path().join("artifacts");
    assert_eq!(
        run(["generate", "--spec", fixture(), "--traces", "20", "--seed", "6", "--out", &s(&log)]),
        0
    );
    fs::write(
        &config,
        r#"{"learning_rate": 0.01, "batch_size": 32, "weight_decay": 0.0,
            "aggregator": "max", "max_epochs": 2, "patience": null, "seed": 6}"#,
    )
    .unwrap();
    assert_eq!(
        run([
            "train", "--log", &s(&log), "--config", &s(&config), "--hidden", "8", "--layers", "1",
            "--max-epochs", "2", "--patience", "0", "--seed", "6", "--out-dir", &s(&artifacts),
        ]),
        0
    );
    // Params header: magic(4) version(4) fingerprint(8) hidden(4) layers(4)
    // then the aggregator code; 2 is max.
    let params = fs::read(artifacts.join("params.bin")).unwrap();
    assert_eq!(params[24], 2, "tuned aggregator must reach the artifacts");
}

#[test]
fn tune_writes_a_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let best = dir.path().join("best.json");
    assert_eq!(
        run(["generate", "--spec", fixture(), "--traces", "25", "--seed", "2", "--out", &s(&log)]),
        0
    );
    assert_eq!(
        run([
            "tune", "--log", &s(&log), "--trials", "2", "--hidden", "8", "--max-epochs", "2",
            "--out", &s(&best), "--deterministic", "false",
        ]),
        0
    );
    let text = fs::read_to_string(&best).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let lr = value["learning_rate"].as_f64().unwrap();
    assert!((1e-4..=1e-1).contains(&lr));
    assert!(value["batch_size"].as_u64().is_some());
}
