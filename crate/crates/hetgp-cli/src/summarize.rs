//! Pairwise model comparison over a grid's results table: win/tie counts
//! per dataset and metric for each model pair, plus per-seed scatter data
//! files for external plotting.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::runner::{read_rows, ResultRow, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Nlpd,
    Mse,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Nlpd => "NLPD",
            Metric::Mse => "MSE",
        }
    }

    fn of(&self, row: &ResultRow) -> f64 {
        match self {
            Metric::Nlpd => row.nlpd,
            Metric::Mse => row.mse,
        }
    }
}

/// Win/tie tallies for one (dataset, metric, model pair), with the
/// per-seed value pairs behind them.
#[derive(Debug, Clone)]
pub struct PairwiseCell {
    pub dataset: String,
    pub metric: Metric,
    pub model_a: String,
    pub model_b: String,
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
    /// (seed, value_a, value_b), sorted by seed.
    pub points: Vec<(u64, f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct PairwiseReport {
    pub cells: Vec<PairwiseCell>,
    pub missing: Vec<String>,
}

impl PairwiseReport {
    /// Wins of `winner` over `loser` on a dataset/metric, with the number
    /// of compared seeds.
    pub fn wins(
        &self,
        dataset: &str,
        metric: Metric,
        winner: &str,
        loser: &str,
    ) -> Option<(usize, usize)> {
        self.cells
            .iter()
            .find(|c| {
                c.dataset == dataset
                    && c.metric == metric
                    && ((c.model_a == winner && c.model_b == loser)
                        || (c.model_a == loser && c.model_b == winner))
            })
            .map(|c| {
                let total = c.wins_a + c.wins_b + c.ties;
                if c.model_a == winner {
                    (c.wins_a, total)
                } else {
                    (c.wins_b, total)
                }
            })
    }
}

const MODEL_ORDER: [&str; 3] = ["STD", "GPLC", "GPLV"];

fn model_rank(name: &str) -> usize {
    MODEL_ORDER
        .iter()
        .position(|m| *m == name)
        .unwrap_or(MODEL_ORDER.len())
}

/// Build the pairwise comparison from result rows. Missing cells (a seed
/// present for one model but not another) are recorded, not fatal.
pub fn pairwise(rows: &[ResultRow]) -> PairwiseReport {
    let datasets: BTreeSet<&str> = rows.iter().map(|r| r.dataset.as_str()).collect();
    let mut report = PairwiseReport::default();
    for dataset in datasets {
        let in_ds: Vec<&ResultRow> = rows.iter().filter(|r| r.dataset == dataset).collect();
        let mut models: Vec<&str> = in_ds
            .iter()
            .map(|r| r.model.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        models.sort_by_key(|m| model_rank(m));
        for (ia, &ma) in models.iter().enumerate() {
            for &mb in &models[ia + 1..] {
                for metric in [Metric::Nlpd, Metric::Mse] {
                    let mut points = Vec::new();
                    let seeds: BTreeSet<u64> = in_ds.iter().map(|r| r.seed).collect();
                    for seed in seeds {
                        let a = in_ds.iter().find(|r| r.model == ma && r.seed == seed);
                        let b = in_ds.iter().find(|r| r.model == mb && r.seed == seed);
                        match (a, b) {
                            (Some(a), Some(b)) => {
                                points.push((seed, metric.of(a), metric.of(b)));
                            }
                            _ => {
                                let missing = if a.is_none() { ma } else { mb };
                                report.missing.push(format!(
                                    "{dataset}/{missing}/seed {seed} ({})",
                                    metric.name()
                                ));
                            }
                        }
                    }
                    let wins_a = points.iter().filter(|(_, a, b)| a < b).count();
                    let wins_b = points.iter().filter(|(_, a, b)| b < a).count();
                    let ties = points.len() - wins_a - wins_b;
                    report.cells.push(PairwiseCell {
                        dataset: dataset.to_string(),
                        metric,
                        model_a: ma.to_string(),
                        model_b: mb.to_string(),
                        wins_a,
                        wins_b,
                        ties,
                        points,
                    });
                }
            }
        }
    }
    report
}

/// Read a results table, write the summary report and scatter files into
/// the same directory, and return the report.
pub fn summarize_dir(dir: &Path) -> Result<(PairwiseReport, PathBuf), RunError> {
    let rows = read_rows(&dir.join("results.csv"))?;
    let report = pairwise(&rows);
    let summary_path = dir.join("summary.txt");
    let mut out = std::io::BufWriter::new(std::fs::File::create(&summary_path).map_err(
        |source| RunError::Io {
            path: summary_path.clone(),
            source,
        },
    )?);
    write_summary(&mut out, &report).map_err(|source| RunError::Io {
        path: summary_path.clone(),
        source,
    })?;
    for cell in &report.cells {
        let path = dir.join(format!(
            "scatter_{}_{}_{}_vs_{}.csv",
            cell.dataset,
            cell.metric.name(),
            cell.model_a,
            cell.model_b
        ));
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path).map_err(|source| {
            RunError::Io {
                path: path.clone(),
                source,
            }
        })?);
        writeln!(f, "seed,{},{}", cell.model_a, cell.model_b).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        for (seed, a, b) in &cell.points {
            writeln!(f, "{seed},{a},{b}").map_err(|source| RunError::Io {
                path: path.clone(),
                source,
            })?;
        }
    }
    Ok((report, summary_path))
}

pub fn write_summary(out: &mut impl Write, report: &PairwiseReport) -> std::io::Result<()> {
    writeln!(out, "Pairwise comparison (lower is better)")?;
    writeln!(out, "=====================================")?;
    let mut last_dataset = String::new();
    for cell in &report.cells {
        if cell.dataset != last_dataset {
            writeln!(out, "\nDataset {}", cell.dataset)?;
            last_dataset = cell.dataset.clone();
        }
        writeln!(
            out,
            "  {:>4}: {} beats {} {}/{}; {} beats {} {}/{}; ties {}",
            cell.metric.name(),
            cell.model_a,
            cell.model_b,
            cell.wins_a,
            cell.points.len(),
            cell.model_b,
            cell.model_a,
            cell.wins_b,
            cell.points.len(),
            cell.ties,
        )?;
    }
    if !report.missing.is_empty() {
        writeln!(out, "\nMissing cells (skipped in the counts above):")?;
        for m in &report.missing {
            writeln!(out, "  {m}")?;
        }
    }
    Ok(())
}
