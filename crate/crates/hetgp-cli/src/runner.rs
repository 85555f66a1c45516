//! Grid execution: one cell per (dataset, model, seed), each generating its
//! training replicate, running one chain, and scoring predictions against
//! the dataset's shared test set. Completed cells are content-addressed by a
//! config hash and skipped on rerun, so interrupted grids resume.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use hetgp::metrics::{act_summary, ActReport, EvalReport};
use hetgp::models::ModelKind;
use hetgp::predict::{predict_gplc, predict_gplv, predict_std, PredictiveSummary};
use hetgp::samplers::{run_chain, AcceptanceSummary, ChainRecord, OpCounters};
use hetgp::synthdata::{Dataset, DatasetKind};

use crate::config::Config;

/// Base seed for the per-dataset shared test sets; far away from any
/// plausible replicate seed so test data never collides with training data.
const TEST_SEED_BASE: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("numerical failure in {context}: {message}")]
    Numerical { context: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One line of the grid results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub model: String,
    pub seed: u64,
    pub mse: f64,
    pub nlpd: f64,
    pub runtime_s: f64,
    pub n_iter: usize,
    pub acc_hyper: Option<f64>,
    pub acc_latent: Option<f64>,
}

/// Full per-cell record persisted as JSON next to the results table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellDiagnostics {
    pub row: ResultRow,
    pub sampler: String,
    pub burn_in: usize,
    pub stored_draws: usize,
    pub acceptance: AcceptanceSummary,
    pub counters: OpCounters,
    pub lpd_first: f64,
    pub lpd_last: f64,
    pub act: Option<Vec<(String, ActReport)>>,
}

pub struct GridOutput {
    pub rows: Vec<ResultRow>,
    pub results_csv: PathBuf,
    pub fresh_cells: usize,
    pub reused_cells: usize,
}

/// Hash of everything that determines a cell's result, so reruns with a
/// changed configuration never reuse stale cells.
fn config_hash(cfg: &Config) -> String {
    let e = &cfg.experiment;
    let key = serde_json::json!({
        "n": e.n,
        "n_test": e.n_test,
        "n_iter": e.n_iter,
        "thin": e.thin,
        "n_wstar": e.n_wstar,
        "sampler": e.sampler,
        "prior": cfg.prior,
        "tuning": cfg.tuning,
    });
    let digest = Sha256::digest(key.to_string().as_bytes());
    digest[..6].iter().map(|b| format!("{b:02x}")).collect()
}

/// The shared test set for a dataset: fixed seed per dataset, so every
/// model and replicate is scored against identical cases.
pub fn test_set(kind: DatasetKind, n_test: usize) -> Dataset {
    kind.generate(TEST_SEED_BASE + test_seed_offset(kind), n_test)
}

fn test_seed_offset(kind: DatasetKind) -> u64 {
    match kind {
        DatasetKind::U1 => 1,
        DatasetKind::U2 => 2,
        DatasetKind::M1 => 3,
        DatasetKind::M2 => 4,
    }
}

/// Run one grid cell end to end: generate the replicate, run the chain,
/// predict on the shared test set, and score.
pub fn run_cell(
    cfg: &Config,
    kind: DatasetKind,
    model: ModelKind,
    seed: u64,
    test: &Dataset,
) -> Result<(ResultRow, CellDiagnostics, ChainRecord), RunError> {
    let e = &cfg.experiment;
    let prior = cfg.prior.to_spec();
    let train = kind.generate(seed, e.n);
    let data = train.to_regression_data();
    let schedule = cfg.schedule_for(model);
    let context = format!("{}/{}/seed {}", kind.name(), model.name(), seed);

    let t0 = Instant::now();
    let chain = run_chain(model, &data, &prior, e.n_iter, seed, &schedule).map_err(|err| {
        RunError::Numerical {
            context: context.clone(),
            message: err.to_string(),
        }
    })?;
    let draws = chain.post_burn_in_snapshots();
    if draws.is_empty() {
        return Err(RunError::Numerical {
            context,
            message: "no post-burn-in draws stored (n_iter too small for thinning)".into(),
        });
    }
    // Prediction RNG derives from the replicate seed so cells stay
    // independent and reruns reproduce bit-identical results.
    let pred_seed = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(17);
    let summaries: Vec<PredictiveSummary> = match model {
        ModelKind::Std => predict_std(&draws, &data, &prior, &test.x),
        ModelKind::Gplc => predict_gplc(&draws, &data, &prior, &test.x, e.n_wstar, pred_seed),
        ModelKind::Gplv => predict_gplv(&draws, &data, &prior, &test.x, pred_seed),
    };
    let runtime_s = t0.elapsed().as_secs_f64();

    let report = EvalReport::new(
        model.name().to_string(),
        kind.name().to_string(),
        seed,
        &summaries,
        &test.f_true,
        &test.y,
    );
    let row = ResultRow {
        dataset: kind.name().into(),
        model: model.name().into(),
        seed,
        mse: report.mse,
        nlpd: report.nlpd,
        runtime_s,
        n_iter: e.n_iter,
        acc_hyper: chain.acceptance.hyper_rate(),
        acc_latent: chain.acceptance.latent_rate(),
    };
    let act = (chain.n_iter - chain.burn_in >= 100).then(|| act_summary(&chain));
    let diag = CellDiagnostics {
        row: row.clone(),
        sampler: chain.sampler.name().into(),
        burn_in: chain.burn_in,
        stored_draws: draws.len(),
        acceptance: chain.acceptance.clone(),
        counters: chain.counters.clone(),
        lpd_first: *chain.lpd_trace.first().unwrap(),
        lpd_last: *chain.lpd_trace.last().unwrap(),
        act,
    };
    Ok((row, diag, chain))
}

fn cell_path(dir: &Path, hash: &str, kind: DatasetKind, model: ModelKind, seed: u64) -> PathBuf {
    dir.join(format!(
        "{}_{}_{}_{}.json",
        kind.name(),
        model.name(),
        seed,
        hash
    ))
}

fn write_trace(path: &Path, chain: &ChainRecord) -> Result<(), RunError> {
    let mut out =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    writeln!(out, "iteration,lpd").map_err(io_err(path))?;
    for (i, lpd) in chain.lpd_trace.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, lpd).map_err(io_err(path))?;
    }
    Ok(())
}

/// Execute the whole grid described by the config: every (dataset, model,
/// seed) cell, reusing any cell JSON already present for the same config
/// hash, then rebuild `results.csv` from all rows.
pub fn run_experiment(cfg: &Config) -> Result<GridOutput, RunError> {
    let out_dir = &cfg.experiment.out_dir;
    let cells_dir = out_dir.join("cells");
    let traces_dir = out_dir.join("traces");
    std::fs::create_dir_all(&cells_dir).map_err(io_err(&cells_dir))?;
    std::fs::create_dir_all(&traces_dir).map_err(io_err(&traces_dir))?;
    let hash = config_hash(cfg);

    let mut jobs = Vec::new();
    for kind in cfg.datasets() {
        for model in cfg.models() {
            for &seed in &cfg.experiment.seeds {
                jobs.push((kind, model, seed));
            }
        }
    }

    let tests: Vec<(DatasetKind, Dataset)> = cfg
        .datasets()
        .into_iter()
        .map(|k| (k, test_set(k, cfg.experiment.n_test)))
        .collect();
    let test_for = |k: DatasetKind| -> &Dataset {
        &tests.iter().find(|(tk, _)| *tk == k).unwrap().1
    };

    let run_one = |&(kind, model, seed): &(DatasetKind, ModelKind, u64)| -> Result<(ResultRow, bool), RunError> {
        let path = cell_path(&cells_dir, &hash, kind, model, seed);
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
            let diag: CellDiagnostics = serde_json::from_str(&text)?;
            return Ok((diag.row, false));
        }
        let (row, diag, chain) = run_cell(cfg, kind, model, seed, test_for(kind))?;
        write_trace(
            &traces_dir.join(format!("{}_{}_{}.csv", kind.name(), model.name(), seed)),
            &chain,
        )?;
        let text = serde_json::to_string_pretty(&diag)?;
        std::fs::write(&path, text).map_err(io_err(&path))?;
        eprintln!(
            "cell {}/{}/seed {}: mse {:.4} nlpd {:.4} ({:.0}s)",
            kind.name(),
            model.name(),
            seed,
            row.mse,
            row.nlpd,
            row.runtime_s
        );
        Ok((row, true))
    };

    let results: Vec<Result<(ResultRow, bool), RunError>> = if cfg.experiment.workers == 1 {
        jobs.iter().map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.experiment.workers)
            .build()
            .expect("thread pool");
        pool.install(|| jobs.par_iter().map(run_one).collect())
    };

    let mut rows = Vec::with_capacity(results.len());
    let mut fresh_cells = 0;
    let mut reused_cells = 0;
    for r in results {
        let (row, fresh) = r?;
        if fresh {
            fresh_cells += 1;
        } else {
            reused_cells += 1;
        }
        rows.push(row);
    }
    rows.sort_by(|a, b| {
        (&a.dataset, &a.model, a.seed).cmp(&(&b.dataset, &b.model, b.seed))
    });

    let results_csv = out_dir.join("results.csv");
    write_rows(&results_csv, &rows)?;
    Ok(GridOutput {
        rows,
        results_csv,
        fresh_cells,
        reused_cells,
    })
}

pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>, RunError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

/// Export every training replicate in the grid as CSV, one file per
/// (dataset, seed), plus each dataset's shared test set.
pub fn export_datasets(cfg: &Config) -> Result<Vec<PathBuf>, RunError> {
    let dir = cfg.experiment.out_dir.join("data");
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut written = Vec::new();
    for kind in cfg.datasets() {
        for &seed in &cfg.experiment.seeds {
            let d = kind.generate(seed, cfg.experiment.n);
            let path = dir.join(d.csv_file_name());
            d.write_csv(&path).map_err(io_err(&path))?;
            written.push(path);
        }
        let t = test_set(kind, cfg.experiment.n_test);
        let path = dir.join(format!("{}_test.csv", kind.name()));
        t.write_csv(&path).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}
