use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use stosched_cli::commands;
use stosched_cli::report::report;
use stosched_cli::{run_experiment, ExperimentConfig, Method, PenaltySetting};

fn toy_config(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        name: "toy".into(),
        instances: vec!["toy".into()],
        penalty: PenaltySetting::Large,
        out: out.to_path_buf(),
        ..ExperimentConfig::default()
    };
    c.dfl.epochs = 10;
    c
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/results")
}

fn psplib(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/psplib")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn toy_ranks_deterministic_worst() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_experiment(&toy_config(dir.path())).unwrap();
    let r = &run.instances[0];
    let det = r
        .get(Method::Deterministic)
        .unwrap()
        .mean_normalized_pregret;
    for m in [Method::Saa, Method::Dfl] {
        assert!(r.get(m).unwrap().mean_normalized_pregret < det);
    }
    for f in ["records.csv", "summary.csv", "ttests.csv", "manifest.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let records = fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 3 * 50);
}

#[test]
fn single_method_single_summary_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = toy_config(dir.path());
    c.methods = vec![Method::Deterministic];
    run_experiment(&c).unwrap();
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    let ttests = fs::read_to_string(dir.path().join("ttests.csv")).unwrap();
    assert_eq!(ttests.lines().count(), 1);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut ca = toy_config(a.path());
    ca.instances.push(psplib("j301_1.sm"));
    ca.dataset.train = 5;
    ca.dataset.test = 5;
    ca.dfl.epochs = 2;
    ca.solver.heuristic_evals = 50;
    let mut cb = ca.clone();
    cb.out = b.path().to_path_buf();
    cb.workers = 2;
    run_experiment(&ca).unwrap();
    run_experiment(&cb).unwrap();
    for f in ["records.csv", "summary.csv", "ttests.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn staged_commands_match_pipeline() {
    let staged = tempfile::tempdir().unwrap();
    let whole = tempfile::tempdir().unwrap();
    let c = toy_config(staged.path());
    commands::gen(&c).unwrap();
    commands::solve_det(&c).unwrap();
    commands::solve_saa_cmd(&c).unwrap();
    commands::train_dfl(&c).unwrap();
    commands::eval(&c).unwrap();
    let mut w = c.clone();
    w.out = whole.path().to_path_buf();
    run_experiment(&w).unwrap();
    for f in ["records.csv", "summary.csv", "ttests.csv"] {
        assert_eq!(
            fs::read(staged.path().join(f)).unwrap(),
            fs::read(whole.path().join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(staged.path().join("toy/dfl_curve.csv").is_file());
    assert!(staged.path().join("toy/saa_trace.csv").is_file());
}

#[test]
fn report_quartiles_on_fixture() {
    let r = report(&fixture_dir()).unwrap();
    assert_eq!(r.rows.len(), 2);
    let close = |x: f64, y: f64| (x - y).abs() < 1e-12;
    // method a: instance means 0.1, 0.3, 0.8; method b: 0.2, 0.2, 0.5
    let a = &r.rows[0];
    assert_eq!((a.method.as_str(), a.instances), ("a", 3));
    assert!(close(a.q1, 0.2) && close(a.median, 0.3) && close(a.q3, 0.55));
    assert!(close(a.min, 0.1) && close(a.max, 0.8) && close(a.mean, 0.4));
    let b = &r.rows[1];
    assert!(close(b.q1, 0.2) && close(b.median, 0.2) && close(b.q3, 0.35));
    assert_eq!(r.ttests[0].p, Some(0.6666));
    assert!(r.to_text().contains("a vs b (n = 3): p = 0.6666"));
}

#[test]
fn report_single_instance_and_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = toy_config(dir.path());
    c.methods = vec![Method::Saa, Method::Dfl];
    let run = run_experiment(&c).unwrap();
    let r = report(dir.path()).unwrap();
    for row in &r.rows {
        let m: Method = row.method.parse().unwrap();
        let mean = run.instances[0].get(m).unwrap().mean_normalized_pregret;
        assert_eq!([row.q1, row.median, row.q3], [mean; 3]);
    }
    assert_eq!(r.ttests[0].status, "degenerate");
    assert!(r.to_text().contains("degenerate"));
}

#[test]
fn report_lists_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("records.csv"), "").unwrap();
    let err = report(dir.path()).unwrap_err().to_string();
    assert!(
        err.contains("summary.csv") && err.contains("ttests.csv"),
        "{err}"
    );
}

#[test]
fn unreadable_instance_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = toy_config(dir.path());
    c.instances = vec![dir.path().join("absent.sm").to_string_lossy().into_owned()];
    let err = run_experiment(&c).unwrap_err().to_string();
    assert!(err.contains("absent.sm"), "{err}");
}

#[test]
fn binary_runs_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(
        &config,
        "instances = [\"toy\"]\nmethods = [\"saa\"]\n[dfl]\nepochs = 2\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_stosched"))
        .args(["run", "--config"])
        .arg(&config)
        .args([
            "--methods",
            "deterministic,dfl",
            "--penalty",
            "0.5",
            "--seed",
            "4",
            "--workers",
            "1",
        ])
        .args(["--time-limit", "10", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.contains(",deterministic,0.5,") && summary.contains(",dfl,0.5,"));
    assert!(!summary.contains(",saa,"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 4);
    assert_eq!(manifest["config"]["solver"]["time_limit"], 10.0);

    let report = Command::new(env!("CARGO_BIN_EXE_stosched"))
        .arg("report")
        .arg(&out)
        .output()
        .unwrap();
    assert!(report.status.success());
    assert!(String::from_utf8_lossy(&report.stdout).contains("deterministic"));
    assert!(out.join("report.csv").is_file());
}

#[test]
fn binary_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "instances = []\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_stosched"))
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least one instance"));

    let out = Command::new(env!("CARGO_BIN_EXE_stosched"))
        .args(["run", "--instance", "toy", "--penalty", "huge"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
