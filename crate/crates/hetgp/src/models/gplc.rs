//! GP regression with a latent covariate: each case carries an unobserved
//! standard-normal input w_i, appended to x_i as an extra kernel dimension.

use crate::kernels::{cov_matrix, KernelSpec};
use crate::linalg::{cholesky, CholFactor, LinalgError, SymMatrix};

use super::{mvn_logpdf_chol, PriorSpec, RegressionData, StateSnapshot, LN_2PI};

/// One MCMC state of the latent-covariate model. Hyperparameter coordinates
/// are `[log η, log ρ_1 .. log ρ_{p+1}, log σ]` (the last length-scale acts
/// on w); the latent vector has one w per training case.
///
/// The covariance matrix is kept alongside its factor so that a single-w
/// change only rebuilds row and column i before refactorizing.
#[derive(Debug, Clone)]
pub struct GplcState {
    hypers: Vec<f64>,
    w: Vec<f64>,
    cov: SymMatrix,
    chol: CholFactor,
    loglik: f64,
    log_post: f64,
}

impl GplcState {
    pub fn new(
        hypers: &[f64],
        w: &[f64],
        data: &RegressionData,
        prior: &PriorSpec,
    ) -> Result<Self, LinalgError> {
        assert_eq!(hypers.len(), data.p() + 3, "GPLC has p+3 hyperparameters");
        assert_eq!(w.len(), data.n(), "latent vector length must be n");
        let spec = kernel_spec(hypers, data.p(), prior);
        let cov = cov_matrix(&spec, data.x(), Some(w));
        let chol = cholesky(&cov)?;
        Ok(Self::assemble(hypers.to_vec(), w.to_vec(), cov, chol, data, prior))
    }

    fn assemble(
        hypers: Vec<f64>,
        w: Vec<f64>,
        cov: SymMatrix,
        chol: CholFactor,
        data: &RegressionData,
        prior: &PriorSpec,
    ) -> Self {
        let loglik = mvn_logpdf_chol(&chol, data.y());
        let w_prior: f64 = -0.5 * w.iter().map(|v| v * v).sum::<f64>()
            - 0.5 * w.len() as f64 * LN_2PI;
        let log_post = loglik + w_prior + prior.log_hyper_prior(&hypers);
        GplcState {
            hypers,
            w,
            cov,
            chol,
            loglik,
            log_post,
        }
    }

    pub fn prior_mean(data: &RegressionData, prior: &PriorSpec) -> Result<Self, LinalgError> {
        Self::new(
            &vec![prior.log_mean; data.p() + 3],
            &vec![0.0; data.n()],
            data,
            prior,
        )
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

    pub fn n_latent(&self) -> usize {
        self.w.len()
    }

    pub fn latent(&self, i: usize) -> f64 {
        self.w[i]
    }

    pub fn latents(&self) -> &[f64] {
        &self.w
    }

    /// Replace one hyperparameter: full covariance rebuild and refactorize.
    pub fn with_hyper(
        &self,
        k: usize,
        value: f64,
        data: &RegressionData,
        prior: &PriorSpec,
    ) -> Result<Self, LinalgError> {
        let mut h = self.hypers.clone();
        h[k] = value;
        Self::new(&h, &self.w, data, prior)
    }

    /// Replace one latent value: only row and column i of the covariance
    /// change, then the factor is recomputed.
    pub fn with_latent(
        &self,
        i: usize,
        value: f64,
        data: &RegressionData,
        prior: &PriorSpec,
    ) -> Result<Self, LinalgError> {
        let p = data.p();
        let spec = kernel_spec(&self.hypers, p, prior);
        let mut w = self.w.clone();
        w[i] = value;
        let mut cov = self.cov.clone();
        let s2 = spec.sigma * spec.sigma;
        let mut ai: Vec<f64> = Vec::with_capacity(p + 1);
        ai.extend_from_slice(&data.x()[i]);
        ai.push(value);
        let mut aj: Vec<f64> = vec![0.0; p + 1];
        for j in 0..data.n() {
            aj[..p].copy_from_slice(&data.x()[j]);
            aj[p] = w[j];
            let mut v = spec.value(&ai, &aj);
            if j == i {
                v += s2;
            }
            cov.set_sym(i, j, v);
        }
        let chol = cholesky(&cov)?;
        Ok(Self::assemble(
            self.hypers.clone(),
            w,
            cov,
            chol,
            data,
            prior,
        ))
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

    pub fn cov(&self) -> &SymMatrix {
        &self.cov
    }

    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            hypers: self.hypers.clone(),
            latent: self.w.clone(),
        }
    }
}

/// Kernel over the augmented input (x, w); σ is floored so the sampled
/// jitter can never vanish entirely.
pub(crate) fn kernel_spec(hypers: &[f64], p: usize, prior: &PriorSpec) -> KernelSpec {
    KernelSpec::se_ard(
        prior.c,
        hypers[0].exp(),
        hypers[1..=p + 1].iter().map(|v| v.exp()).collect(),
        hypers[p + 2].exp().max(prior.sigma_floor),
    )
}

/// Total log posterior: data term, N(0,1) prior on every w_i, hyperpriors.
/// −∞ when the covariance matrix is not positive definite.
pub fn log_post_gplc(
    hypers: &[f64],
    w: &[f64],
    data: &RegressionData,
    prior: &PriorSpec,
) -> f64 {
    match GplcState::new(hypers, w, data, prior) {
        Ok(s) => s.log_post(),
        Err(_) => f64::NEG_INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{log_normal_pdf, log_post_std};
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_data(n: usize, seed: u64) -> RegressionData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..1.0)]).collect();
        let y: Vec<f64> = x.iter().map(|r| (3.0 * r[0]).sin() + 0.1).collect();
        RegressionData::new(x, y)
    }

    #[test]
    fn zero_latents_reduce_to_std() {
        // With w ≡ 0 the augmented kernel cannot see the latent dimension, so
        // the data term matches STD with the same (η, ρ, σ); the only
        // differences are the w prior mass at zero and the extra ρ_w
        // hyperprior term.
        let data = toy_data(8, 1);
        let prior = PriorSpec::default();
        let gplc_h = [0.2, -0.1, 0.7, -0.4];
        let std_h = [0.2, -0.1, -0.4];
        let g = GplcState::new(&gplc_h, &vec![0.0; 8], &data, &prior).unwrap();
        let lp_std = log_post_std(&std_h, &data, &prior);
        let expected = lp_std
            + log_normal_pdf(0.7, prior.log_mean, prior.log_sd)
            - 0.5 * 8.0 * LN_2PI;
        assert_relative_eq!(g.log_post(), expected, max_relative = 1e-10);
    }

    #[test]
    fn latent_prior_included_in_target() {
        // With a huge w length-scale the data term ignores w, so moving one
        // latent changes the log posterior by exactly the N(0,1) prior delta.
        let data = toy_data(6, 2);
        let prior = PriorSpec::default();
        let hypers = [0.0, 0.0, 20.0, -1.0];
        let a = GplcState::new(&hypers, &vec![0.0; 6], &data, &prior).unwrap();
        let b = a.with_latent(3, 2.0, &data, &prior).unwrap();
        assert_relative_eq!(b.log_post() - a.log_post(), -2.0, epsilon = 1e-6);
    }

    #[test]
    fn with_latent_matches_full_rebuild() {
        let data = toy_data(12, 3);
        let prior = PriorSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w0: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let hypers = [0.3, -0.2, 0.5, -1.2];
        let s = GplcState::new(&hypers, &w0, &data, &prior).unwrap();
        let inc = s.with_latent(5, 0.77, &data, &prior).unwrap();
        let mut w1 = w0.clone();
        w1[5] = 0.77;
        let full = GplcState::new(&hypers, &w1, &data, &prior).unwrap();
        assert_relative_eq!(inc.log_post(), full.log_post(), max_relative = 1e-8);
        // Only row/column 5 of the covariance moved.
        for i in 0..12 {
            for j in 0..12 {
                if i != 5 && j != 5 {
                    assert_eq!(inc.cov().get(i, j), s.cov().get(i, j));
                } else {
                    assert_eq!(inc.cov().get(i, j), full.cov().get(i, j));
                }
            }
        }
    }

    #[test]
    fn sigma_floor_applies() {
        let prior = PriorSpec::default();
        let spec = kernel_spec(&[0.0, 0.0, 0.0, -100.0], 1, &prior);
        assert_eq!(spec.sigma, prior.sigma_floor);
    }
}
