//! Standard GP regression: constant residual variance, no latent variables.

use crate::kernels::{cov_matrix, KernelSpec};
use crate::linalg::{cholesky, CholFactor, LinalgError};

use super::{mvn_logpdf_chol, PriorSpec, RegressionData, StateSnapshot};

/// One MCMC state of the standard model. Hyperparameter coordinates are
/// `[log η, log ρ_1 .. log ρ_p, log σ]`; the cached factor is always
/// consistent with them.
#[derive(Debug, Clone)]
pub struct StdState {
    hypers: Vec<f64>,
    chol: CholFactor,
    loglik: f64,
    log_post: f64,
}

impl StdState {
    pub fn new(
        hypers: &[f64],
        data: &RegressionData,
        prior: &PriorSpec,
    ) -> Result<Self, LinalgError> {
        assert_eq!(hypers.len(), data.p() + 2, "STD has p+2 hyperparameters");
        let spec = kernel_spec(hypers, data.p(), prior);
        let cov = cov_matrix(&spec, data.x(), None);
        let chol = cholesky(&cov)?;
        let loglik = mvn_logpdf_chol(&chol, data.y());
        let log_post = loglik + prior.log_hyper_prior(hypers);
        Ok(StdState {
            hypers: hypers.to_vec(),
            chol,
            loglik,
            log_post,
        })
    }

    /// Prior-mean start: every log-hyperparameter at its prior mean.
    pub fn prior_mean(data: &RegressionData, prior: &PriorSpec) -> Result<Self, LinalgError> {
        Self::new(&vec![prior.log_mean; data.p() + 2], data, prior)
    }

    pub fn n_hyper(&self) -> usize {
        self.hypers.len()
    }

    pub fn hyper(&self, k: usize) -> f64 {
        self.hypers[k]
    }

    pub fn hypers(&self) -> &[f64] {
        &self.hypers
    }

    /// Rebuild with one hyperparameter coordinate replaced (full
    /// recomputation: covariance matrix and factorization).
    pub fn with_hyper(
        &self,
        k: usize,
        value: f64,
        data: &RegressionData,
        prior: &PriorSpec,
    ) -> Result<Self, LinalgError> {
        let mut h = self.hypers.clone();
        h[k] = value;
        Self::new(&h, data, prior)
    }

    pub fn log_post(&self) -> f64 {
        self.log_post
    }

    pub fn loglik(&self) -> f64 {
        self.loglik
    }

    pub fn chol(&self) -> &CholFactor {
        &self.chol
    }

    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            hypers: self.hypers.clone(),
            latent: Vec::new(),
        }
    }
}

/// Kernel derived from log-scale hyperparameters.
pub(crate) fn kernel_spec(hypers: &[f64], p: usize, prior: &PriorSpec) -> KernelSpec {
    KernelSpec::se_ard(
        prior.c,
        hypers[0].exp(),
        hypers[1..=p].iter().map(|v| v.exp()).collect(),
        hypers[p + 1].exp(),
    )
}

/// Total log posterior density (data term plus hyperpriors, constants
/// included); −∞ when the covariance matrix is not positive definite.
pub fn log_post_std(hypers: &[f64], data: &RegressionData, prior: &PriorSpec) -> f64 {
    match StdState::new(hypers, data, prior) {
        Ok(s) => s.log_post(),
        Err(_) => f64::NEG_INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_variance_at_zero() {
        // c=0, eta=1, sigma ~ 0, one observation at y=0: the likelihood is a
        // standard normal at its mode.
        let data = RegressionData::new(vec![vec![0.0]], vec![0.0]);
        let prior = PriorSpec {
            c: 0.0,
            ..PriorSpec::default()
        };
        let hypers = [0.0, 0.0, -50.0];
        let s = StdState::new(&hypers, &data, &prior).unwrap();
        let expected = -0.9189385332046727 + prior.log_hyper_prior(&hypers);
        assert_relative_eq!(s.log_post(), expected, max_relative = 1e-12);
    }

    #[test]
    fn two_point_hand_case() {
        // C = [[2,1],[1,2]] via eta²=2, e^{-d²/ρ²}=1/2, σ≈0:
        // loglik = −log 2π − ½ log 3 − 1/3.
        let d = (2f64.ln()).sqrt();
        let data = RegressionData::new(vec![vec![0.0], vec![d]], vec![1.0, 1.0]);
        let prior = PriorSpec {
            c: 0.0,
            ..PriorSpec::default()
        };
        let hypers = [0.5 * 2f64.ln(), 0.0, -50.0];
        let s = StdState::new(&hypers, &data, &prior).unwrap();
        assert_relative_eq!(s.loglik(), -2.720516544076734, max_relative = 1e-10);
        assert_relative_eq!(
            s.log_post(),
            -2.720516544076734 + prior.log_hyper_prior(&hypers),
            max_relative = 1e-10
        );
    }

    #[test]
    fn non_pd_gives_neg_infinity() {
        // Two identical inputs with zero jitter: singular covariance.
        let data = RegressionData::new(vec![vec![0.3], vec![0.3]], vec![0.1, 0.2]);
        let prior = PriorSpec {
            c: 0.0,
            ..PriorSpec::default()
        };
        let lp = log_post_std(&[0.0, 0.0, -400.0], &data, &prior);
        assert_eq!(lp, f64::NEG_INFINITY);
    }
}
