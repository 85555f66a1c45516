//! Log-posterior evaluation for the three regression models, with the
//! covariance-matrix bookkeeping each one needs: which factors a
//! hyperparameter or latent-variable change invalidates, and the cheapest
//! way to refresh them.

mod gplc;
mod gplv;
mod standard;

pub use gplc::{log_post_gplc, GplcState};
pub(crate) use gplc::kernel_spec as gplc_kernel_spec;
pub use gplv::{log_post_gplv, GplvState};
pub(crate) use gplv::{kernel_spec_y as gplv_kernel_spec_y, kernel_spec_z as gplv_kernel_spec_z};
pub use standard::{log_post_std, StdState};
pub(crate) use standard::kernel_spec as std_kernel_spec;

use serde::{Deserialize, Serialize};

use crate::linalg::{quad_form_inv, CholFactor};

pub const LN_2PI: f64 = 1.8378770664093453;

/// Which of the three models a state or chain belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Std,
    Gplc,
    Gplv,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Std => "STD",
            ModelKind::Gplc => "GPLC",
            ModelKind::Gplv => "GPLV",
        }
    }
}

/// Training inputs and responses.
#[derive(Debug, Clone)]
pub struct RegressionData {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl RegressionData {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len(), "inputs and responses must align");
        assert!(!x.is_empty(), "need at least one observation");
        let p = x[0].len();
        assert!(x.iter().all(|r| r.len() == p), "ragged input rows");
        RegressionData { x, y }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y.len()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.x[0].len()
    }

    #[inline]
    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    #[inline]
    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

/// Priors and fixed constants shared by all models: independent Gaussians on
/// the log of every hyperparameter, the kernel constant c, the fixed GPLV
/// jitter SD, and the floor on the GPLC jitter hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub log_mean: f64,
    pub log_sd: f64,
    pub c: f64,
    pub sigma_jitter: f64,
    pub sigma_floor: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            log_mean: 0.0,
            log_sd: 2.0,
            c: 0.1,
            sigma_jitter: 1e-3,
            sigma_floor: 1e-4,
        }
    }
}

impl PriorSpec {
    /// Sum of Gaussian log densities over a block of log-hyperparameters.
    pub fn log_hyper_prior(&self, log_values: &[f64]) -> f64 {
        log_values
            .iter()
            .map(|&v| log_normal_pdf(v, self.log_mean, self.log_sd))
            .sum()
    }
}

/// One stored MCMC draw: log-scale hyperparameters in the model's coordinate
/// order, plus the latent vector (empty for STD).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub hypers: Vec<f64>,
    pub latent: Vec<f64>,
}

/// Scalar Gaussian log density.
#[inline]
pub fn log_normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let t = (x - mean) / sd;
    -0.5 * t * t - sd.ln() - 0.5 * LN_2PI
}

/// Multivariate Gaussian log density N(x | 0, L Lᵀ) from a Cholesky factor.
#[inline]
pub(crate) fn mvn_logpdf_chol(f: &CholFactor, x: &[f64]) -> f64 {
    -0.5 * (x.len() as f64 * LN_2PI + f.logdet() + quad_form_inv(f, x))
}
