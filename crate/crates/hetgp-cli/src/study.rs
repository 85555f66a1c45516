//! GPLV sampler-efficiency study: the three latent-update schemes run on
//! the same replicate from the same prior-mean start, several repeats each,
//! producing a CPU-adjusted autocorrelation-time table and log-posterior
//! traces truncated to an equal CPU budget across samplers.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hetgp::metrics::{act_summary, ActReport};
use hetgp::models::ModelKind;
use hetgp::samplers::{run_chain, ChainRecord, SamplerKind, ScheduleConfig};
use hetgp::synthdata::DatasetKind;

use crate::config::Config;
use crate::runner::RunError;

pub const STUDY_SAMPLERS: [SamplerKind; 3] = [
    SamplerKind::ModifiedMetropolis,
    SamplerKind::Metropolis,
    SamplerKind::Slice,
];

/// One sampler's outcome for one repeat.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyRun {
    pub sampler: String,
    pub repeat: usize,
    pub seed: u64,
    pub total_cpu_s: f64,
    pub act: Vec<(String, ActReport)>,
    pub lpd_trace: Vec<f64>,
    pub cpu_per_iter: Vec<f64>,
}

impl StudyRun {
    /// Cumulative CPU time at the end of each iteration.
    pub fn cumulative_cpu(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.cpu_per_iter
            .iter()
            .map(|dt| {
                acc += dt;
                acc
            })
            .collect()
    }

    pub fn tau_tilde(&self, quantity: &str) -> Option<f64> {
        self.act
            .iter()
            .find(|(name, _)| name == quantity)
            .map(|(_, r)| r.tau_tilde)
    }

    /// CPU time needed for the log posterior to first come within `margin`
    /// of the median over the trace's final quarter.
    pub fn cpu_to_reach_final_level(&self, margin: f64) -> Option<f64> {
        let n = self.lpd_trace.len();
        let tail = &self.lpd_trace[n - n / 4..];
        let mut sorted: Vec<f64> = tail.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        let threshold = median - margin;
        let cum = self.cumulative_cpu();
        self.lpd_trace
            .iter()
            .position(|&lpd| lpd >= threshold)
            .map(|i| cum[i])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyOutput {
    pub dataset: String,
    pub n_iter: usize,
    pub repeats: usize,
    pub runs: Vec<StudyRun>,
}

impl StudyOutput {
    pub fn runs_for(&self, sampler: SamplerKind) -> Vec<&StudyRun> {
        self.runs
            .iter()
            .filter(|r| r.sampler == sampler.name())
            .collect()
    }
}

/// Run the study: every sampler scheme on the same replicate, `repeats`
/// chains each, all starting from the prior mean.
pub fn run_sampler_study(cfg: &Config) -> Result<StudyOutput, RunError> {
    let kind = DatasetKind::from_name(&cfg.study.dataset).expect("validated");
    let e = &cfg.experiment;
    let prior = cfg.prior.to_spec();
    let train = kind.generate(cfg.study.data_seed, e.n);
    let data = train.to_regression_data();

    let mut runs = Vec::new();
    for repeat in 0..cfg.study.repeats {
        let seed = cfg.study.chain_seed_base + repeat as u64;
        for sampler in STUDY_SAMPLERS {
            let schedule = ScheduleConfig {
                sampler,
                ..cfg.schedule_for(ModelKind::Gplv)
            };
            let chain: ChainRecord = run_chain(
                ModelKind::Gplv,
                &data,
                &prior,
                e.n_iter,
                seed,
                &schedule,
            )
            .map_err(|err| RunError::Numerical {
                context: format!("study {}/{}/repeat {repeat}", kind.name(), sampler.name()),
                message: err.to_string(),
            })?;
            let act = act_summary(&chain);
            runs.push(StudyRun {
                sampler: sampler.name().into(),
                repeat,
                seed,
                total_cpu_s: chain.cpu_per_iter.iter().sum(),
                act,
                lpd_trace: chain.lpd_trace,
                cpu_per_iter: chain.cpu_per_iter,
            });
            let last = runs.last().unwrap();
            eprintln!(
                "study {}/repeat {repeat}: {:.0}s cpu, final lpd {:.1}",
                last.sampler,
                last.total_cpu_s,
                last.lpd_trace.last().unwrap()
            );
        }
    }
    Ok(StudyOutput {
        dataset: kind.name().into(),
        n_iter: e.n_iter,
        repeats: cfg.study.repeats,
        runs,
    })
}

/// Write the τ̃ table and the equal-CPU-budget traces.
///
/// `study_tau.csv` holds one row per (sampler, quantity, repeat) plus
/// `mean` rows aggregated over repeats; each repeat's traces are truncated
/// at the smallest total CPU time among the three samplers so they cover
/// identical budgets.
pub fn export_study(out_dir: &Path, study: &StudyOutput) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();

    let tau_path = out_dir.join("study_tau.csv");
    {
        let mut f = make_file(&tau_path)?;
        writeln!(f, "sampler,quantity,repeat,tau_hat,cutoff_k,cpu_per_iter,tau_tilde")
            .map_err(io_at(&tau_path))?;
        let quantities: Vec<String> = study
            .runs
            .first()
            .map(|r| r.act.iter().map(|(q, _)| q.clone()).collect())
            .unwrap_or_default();
        for run in &study.runs {
            for (q, rep) in &run.act {
                writeln!(
                    f,
                    "{},{},{},{},{},{},{}",
                    run.sampler, q, run.repeat, rep.tau_hat, rep.cutoff_k, rep.cpu_per_iter,
                    rep.tau_tilde
                )
                .map_err(io_at(&tau_path))?;
            }
        }
        for sampler in STUDY_SAMPLERS {
            let runs = study.runs_for(sampler);
            for q in &quantities {
                let taus: Vec<f64> = runs.iter().filter_map(|r| r.tau_tilde(q)).collect();
                if taus.is_empty() {
                    continue;
                }
                let mean = taus.iter().sum::<f64>() / taus.len() as f64;
                writeln!(f, "{},{},mean,,,,{}", sampler.name(), q, mean)
                    .map_err(io_at(&tau_path))?;
            }
        }
    }
    written.push(tau_path);

    for repeat in 0..study.repeats {
        let budget = STUDY_SAMPLERS
            .iter()
            .filter_map(|s| {
                study
                    .runs
                    .iter()
                    .find(|r| r.sampler == s.name() && r.repeat == repeat)
                    .map(|r| r.total_cpu_s)
            })
            .fold(f64::INFINITY, f64::min);
        for sampler in STUDY_SAMPLERS {
            let Some(run) = study
                .runs
                .iter()
                .find(|r| r.sampler == sampler.name() && r.repeat == repeat)
            else {
                continue;
            };
            let path = out_dir.join(format!("trace_{}_{repeat}.csv", sampler.name()));
            let mut f = make_file(&path)?;
            writeln!(f, "iteration,cpu_s,lpd").map_err(io_at(&path))?;
            let cum = run.cumulative_cpu();
            for (i, (&cpu, &lpd)) in cum.iter().zip(&run.lpd_trace).enumerate() {
                if cpu > budget {
                    break;
                }
                writeln!(f, "{},{},{}", i + 1, cpu, lpd).map_err(io_at(&path))?;
            }
            written.push(path);
        }
    }
    Ok(written)
}

fn make_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, RunError> {
    Ok(std::io::BufWriter::new(
        std::fs::File::create(path).map_err(io_at(path))?,
    ))
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}
