//! Integration tests for the experiment harness: results-table round-trip,
//! pairwise counting against the reference results table, binary exit
//! codes, and rerun determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

use hetgp_cli::config::Config;
use hetgp_cli::runner::{read_rows, run_experiment, write_rows, ResultRow};
use hetgp_cli::summarize::{pairwise, summarize_dir, Metric};

fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/reference_results.csv")
}

fn tiny_config(dir: &Path, out: &Path) -> PathBuf {
    let body = format!(
        r#"
[experiment]
datasets = ["U1"]
models = ["STD"]
seeds = [1, 2]
n = 16
n_test = 30
n_iter = 40
thin = 4
out_dir = "{}"
workers = 1
"#,
        out.display()
    );
    let p = dir.join("tiny.toml");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn rows_round_trip_exactly() {
    let rows = vec![
        ResultRow {
            dataset: "U1".into(),
            model: "STD".into(),
            seed: 3,
            mse: 0.123456789012345678,
            nlpd: -1.5e-13,
            runtime_s: 17.25,
            n_iter: 2000,
            acc_hyper: Some(0.4999999999999999),
            acc_latent: None,
        },
        ResultRow {
            dataset: "M2".into(),
            model: "GPLV".into(),
            seed: 10,
            mse: 3.1e-300,
            nlpd: 0.2372208420904569,
            runtime_s: 0.0,
            n_iter: 4,
            acc_hyper: None,
            acc_latent: Some(0.014),
        },
    ];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    write_rows(&path, &rows).unwrap();
    let back = read_rows(&path).unwrap();
    assert_eq!(rows, back);
}

#[test]
fn reference_results_pairwise_counts() {
    // Hand-counted from the reference table; exercises every counting path
    // including the one exact MSE tie.
    let rows = read_rows(&fixture_path()).unwrap();
    assert_eq!(rows.len(), 120);
    let rep = pairwise(&rows);
    assert!(rep.missing.is_empty());

    assert_eq!(rep.wins("U2", Metric::Nlpd, "GPLC", "GPLV"), Some((10, 10)));
    assert_eq!(rep.wins("M2", Metric::Nlpd, "GPLC", "GPLV"), Some((9, 10)));
    assert_eq!(rep.wins("U1", Metric::Nlpd, "GPLV", "GPLC"), Some((7, 10)));
    assert_eq!(rep.wins("U1", Metric::Nlpd, "GPLV", "STD"), Some((10, 10)));
    assert_eq!(rep.wins("U1", Metric::Nlpd, "GPLC", "STD"), Some((9, 10)));
    assert_eq!(rep.wins("M1", Metric::Nlpd, "GPLC", "STD"), Some((10, 10)));
    assert_eq!(rep.wins("M1", Metric::Nlpd, "GPLV", "STD"), Some((10, 10)));

    let cell = rep
        .cells
        .iter()
        .find(|c| c.dataset == "U1" && c.metric == Metric::Mse && c.model_b == "GPLV"
            && c.model_a == "GPLC")
        .unwrap();
    assert_eq!(cell.ties, 1);
}

#[test]
fn grid_rerun_reuses_cells_and_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = Config::load(&tiny_config(dir.path(), &out)).unwrap();
    let first = run_experiment(&cfg).unwrap();
    assert_eq!(first.fresh_cells, 2);
    let bytes1 = std::fs::read(&first.results_csv).unwrap();
    let second = run_experiment(&cfg).unwrap();
    assert_eq!(second.fresh_cells, 0);
    assert_eq!(second.reused_cells, 2);
    let bytes2 = std::fs::read(&second.results_csv).unwrap();
    assert_eq!(bytes1, bytes2);

    let (report, _) = summarize_dir(&out).unwrap();
    assert!(report.cells.is_empty(), "single model has no pairs");

    // Same config into a fresh directory: identical statistics from
    // scratch (wall-clock runtimes differ, nothing else may).
    let out2 = dir.path().join("out2");
    let cfg2 = Config::load(&tiny_config(dir.path(), &out2)).unwrap();
    let third = run_experiment(&cfg2).unwrap();
    assert_eq!(third.fresh_cells, 2);
    let strip = |mut rows: Vec<ResultRow>| {
        for r in &mut rows {
            r.runtime_s = 0.0;
        }
        rows
    };
    assert_eq!(strip(first.rows.clone()), strip(third.rows.clone()));
}

#[test]
fn binary_exit_codes_and_outputs() {
    let exe = env!("CARGO_BIN_EXE_hetgp");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg_path = tiny_config(dir.path(), &out);

    let ok = Command::new(exe).arg("run").arg(&cfg_path).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("results.csv").exists());
    assert!(out.join("traces/U1_STD_1.csv").exists());

    let gen = Command::new(exe)
        .arg("gen-data")
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert!(gen.status.success());
    assert!(out.join("data/U1_1.csv").exists());
    assert!(out.join("data/U1_2.csv").exists());
    assert!(out.join("data/U1_test.csv").exists());

    let sum = Command::new(exe).arg("summarize").arg(&out).output().unwrap();
    assert!(sum.status.success());

    let missing = Command::new(exe)
        .arg("run")
        .arg(dir.path().join("nope.toml"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        r#"
[experiment]
datasets = ["U9"]
models = ["STD"]
seeds = [1]
out_dir = "x"
"#,
    )
    .unwrap();
    let invalid = Command::new(exe).arg("run").arg(&bad).output().unwrap();
    assert_eq!(invalid.status.code(), Some(2));
}

#[test]
fn out_dir_env_override() {
    let exe = env!("CARGO_BIN_EXE_hetgp");
    let dir = tempfile::tempdir().unwrap();
    let configured = dir.path().join("ignored");
    let overridden = dir.path().join("actual");
    let cfg_path = tiny_config(dir.path(), &configured);
    let ok = Command::new(exe)
        .arg("gen-data")
        .arg(&cfg_path)
        .env("HETGP_OUT_DIR", &overridden)
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(overridden.join("data/U1_1.csv").exists());
    assert!(!configured.exists());
}
