//! Evaluation metrics: mean squared error against the noise-free truth,
//! average negative log predictive density under the Monte-Carlo mixture,
//! and autocorrelation-time estimation with a noise-band cutoff, optionally
//! adjusted for CPU time per iteration.

use serde::{Deserialize, Serialize};

use crate::models::LN_2PI;
use crate::predict::PredictiveSummary;
use crate::samplers::ChainRecord;

/// MSE and NLPD for one (model, dataset, replicate) cell with the per-case
/// contributions that average to them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub dataset: String,
    pub replicate: u64,
    pub mse: f64,
    pub nlpd: f64,
    pub per_case_sq_err: Vec<f64>,
    pub per_case_nlpd: Vec<f64>,
}

impl EvalReport {
    pub fn new(
        model: String,
        dataset: String,
        replicate: u64,
        summaries: &[PredictiveSummary],
        f_true: &[f64],
        y_test: &[f64],
    ) -> Self {
        let per_case_sq_err: Vec<f64> = summaries
            .iter()
            .zip(f_true)
            .map(|(s, f)| (s.mean - f) * (s.mean - f))
            .collect();
        let per_case_nlpd = per_case_nlpd(summaries, y_test);
        let n = summaries.len() as f64;
        EvalReport {
            model,
            dataset,
            replicate,
            mse: per_case_sq_err.iter().sum::<f64>() / n,
            nlpd: per_case_nlpd.iter().sum::<f64>() / n,
            per_case_sq_err,
            per_case_nlpd,
        }
    }
}

/// Mean squared error of predictive means against true function values.
pub fn mse(pred_means: &[f64], f_true: &[f64]) -> f64 {
    assert_eq!(pred_means.len(), f_true.len(), "length mismatch");
    assert!(!pred_means.is_empty());
    pred_means
        .iter()
        .zip(f_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / pred_means.len() as f64
}

fn log_mixture_density(components: &[(f64, f64)], y: f64) -> f64 {
    // log [(1/M) Σ_j φ(y | μ_j, σ²_j)] via log-sum-exp.
    assert!(!components.is_empty(), "need at least one mixture component");
    let logs: Vec<f64> = components
        .iter()
        .map(|&(mu, var)| {
            assert!(var > 0.0, "non-positive component variance {var}");
            let d = y - mu;
            -0.5 * (LN_2PI + var.ln() + d * d / var)
        })
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + (logs.iter().map(|l| (l - max).exp()).sum::<f64>() / logs.len() as f64).ln()
}

/// Per-case negative log predictive densities.
pub fn per_case_nlpd(summaries: &[PredictiveSummary], y_test: &[f64]) -> Vec<f64> {
    assert_eq!(summaries.len(), y_test.len(), "length mismatch");
    summaries
        .iter()
        .zip(y_test)
        .map(|(s, &y)| -log_mixture_density(&s.components, y))
        .collect()
}

/// Average negative log predictive density over test cases.
pub fn nlpd(summaries: &[PredictiveSummary], y_test: &[f64]) -> f64 {
    let per = per_case_nlpd(summaries, y_test);
    per.iter().sum::<f64>() / per.len() as f64
}

/// Autocorrelation time estimate with its cutoff and the CPU-adjusted value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ActReport {
    pub tau_hat: f64,
    pub cutoff_k: usize,
    pub cpu_per_iter: f64,
    pub tau_tilde: f64,
}

/// Autocorrelation time τ̂ = 1 + 2 Σ_{i≤k} γ̂_i with biased-normalization
/// autocorrelations and a deterministic cutoff: k is the first lag where γ̂
/// drops below 2/√M for 3 consecutive lags, capped at M/10. A constant
/// series reports τ̂ = 1.
pub fn act_time(series: &[f64], cpu_per_iter: f64) -> ActReport {
    let m = series.len();
    assert!(m >= 10, "need at least 10 points");
    let mean = series.iter().sum::<f64>() / m as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let var = centered.iter().map(|v| v * v).sum::<f64>() / m as f64;
    if var <= 0.0 || !var.is_finite() {
        return ActReport {
            tau_hat: 1.0,
            cutoff_k: 0,
            cpu_per_iter,
            tau_tilde: cpu_per_iter,
        };
    }
    let max_lag = (m / 10).max(1);
    let band = 2.0 / (m as f64).sqrt();
    let gamma = |lag: usize| -> f64 {
        let mut s = 0.0;
        for t in 0..m - lag {
            s += centered[t] * centered[t + lag];
        }
        s / m as f64 / var
    };
    let mut gammas = Vec::with_capacity(max_lag + 2);
    let mut cutoff = max_lag;
    let mut below_run = 0usize;
    for lag in 1..=max_lag + 2 {
        let g = gamma(lag);
        gammas.push(g);
        if g < band {
            below_run += 1;
            if below_run == 3 {
                cutoff = (lag + 1 - below_run).min(max_lag);
                break;
            }
        } else {
            below_run = 0;
        }
    }
    let tau_hat = 1.0 + 2.0 * gammas[..cutoff].iter().sum::<f64>();
    ActReport {
        tau_hat,
        cutoff_k: cutoff,
        cpu_per_iter,
        tau_tilde: tau_hat * cpu_per_iter,
    }
}

/// Autocorrelation reports for a chain's diagnostic quantities (each
/// hyperparameter on its natural scale plus the latent sum and sum of
/// squares), computed on the post-burn-in portion and adjusted by the
/// chain's mean CPU time per iteration.
pub fn act_summary(chain: &ChainRecord) -> Vec<(String, ActReport)> {
    let post = chain.n_iter - chain.burn_in;
    assert!(post >= 100, "need at least 100 post-burn-in iterations");
    let cpu = chain.mean_cpu_per_iter();
    chain
        .quantity_names
        .iter()
        .map(|name| {
            let series = chain.quantity_post_burn_in(name).unwrap();
            (name.clone(), act_time(series, cpu))
        })
        .collect()
}
