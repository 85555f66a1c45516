//! GP regression with a latent variance: a main GP for the response whose
//! residual variance is exp(2 z_i) per case, and a secondary GP (plus fixed
//! jitter) for the log residual SDs z.
//!
//! The two covariance caches are independent: a main-GP hyperparameter
//! change refactors C_y only, a secondary-GP change refactors C_z only, and
//! a single-z change touches one diagonal entry of C_y, which is a rank-1
//! factor update.

use std::sync::Arc;

use crate::kernels::{cov_matrix, KernelSpec};
use crate::linalg::{cholesky, rank1_update, CholFactor, LinalgError, SymMatrix, UpdateSign};

use super::{mvn_logpdf_chol, PriorSpec, RegressionData, StateSnapshot};

#[derive(Debug)]
struct YCache {
    cov: SymMatrix,
    chol: CholFactor,
    loglik: f64,
}

#[derive(Debug)]
struct ZCache {
    chol: CholFactor,
}

/// One MCMC state of the latent-variance model. Main-GP coordinates are
/// `[log η_y, log ρ_y1 .. log ρ_yp]`, secondary `[log η_z, log ρ_z1 ..
/// log ρ_zp]`; the latent vector holds the n log residual SDs.
#[derive(Debug, Clone)]
pub struct GplvState {
    hyper_y: Vec<f64>,
    hyper_z: Vec<f64>,
    z: Vec<f64>,
    ycache: Arc<YCache>,
    zcache: Arc<ZCache>,
    z_prior: f64,
    log_post: f64,
}

impl GplvState {
    pub fn new(
        hyper_y: &[f64],
        hyper_z: &[f64],
        z: &[f64],
        data: &RegressionData,
        prior: &PriorSpec,
    ) -> Result<Self, LinalgError> {
        let p = data.p();
        assert_eq!(hyper_y.len(), p + 1, "main GP has p+1 hyperparameters");
        assert_eq!(hyper_z.len(), p + 1, "secondary GP has p+1 hyperparameters");
        assert_eq!(z.len(), data.n(), "latent vector length must be n");
        let ycache = Arc::new(build_ycache(hyper_y, z, data, prior)?);
        let zcache = Arc::new(build_zcache(hyper_z, data, prior)?);
        Ok(Self::assemble(
            hyper_y.to_vec(),
            hyper_z.to_vec(),
            z.to_vec(),
            ycache,
            zcache,
            prior,
        ))
    }

    fn assemble(
        hyper_y: Vec<f64>,
        hyper_z: Vec<f64>,
        z: Vec<f64>,
        ycache: Arc<YCache>,
        zcache: Arc<ZCache>,
        prior: &PriorSpec,
    ) -> Self {
        let z_prior = mvn_logpdf_chol(&zcache.chol, &z);
        let log_post = ycache.loglik
            + z_prior
            + prior.log_hyper_prior(&hyper_y)
            + prior.log_hyper_prior(&hyper_z);
        GplvState {
            hyper_y,
            hyper_z,
            z,
            ycache,
            zcache,
            z_prior,
            log_post,
        }
    }

    pub fn prior_mean(data: &RegressionData, prior: &PriorSpec) -> Result<Self, LinalgError> {
        let h = vec![prior.log_mean; data.p() + 1];
        Self::new(&h, &h, &vec![0.0; data.n()], data, prior)
    }

    pub fn n_hyper_y(&self) -> usize {
        self.hyper_y.len()
    }

    pub fn n_hyper_z(&self) -> usize {
        self.hyper_z.len()
    }

    pub fn hyper_y(&self, k: usize) -> f64 {
        self.hyper_y[k]
    }

    pub fn hyper_z(&self, k: usize) -> f64 {
        self.hyper_z[k]
    }

    pub fn hypers_y(&self) -> &[f64] {
        &self.hyper_y
    }

    pub fn hypers_z(&self) -> &[f64] {
        &self.hyper_z
    }

    pub fn n_latent(&self) -> usize {
        self.z.len()
    }

    pub fn latent(&self, i: usize) -> f64 {
        self.z[i]
    }

    pub fn latents(&self) -> &[f64] {
        &self.z
    }

    /// Replace one main-GP hyperparameter: rebuild and refactor C_y; the
    /// secondary cache is shared untouched.
    pub fn with_hyper_y(
        &self,
        k: usize,
        value: f64,
        data: &RegressionData,
        prior: &PriorSpec,
    ) -> Result<Self, LinalgError> {
        let mut h = self.hyper_y.clone();
        h[k] = value;
        let ycache = Arc::new(build_ycache(&h, &self.z, data, prior)?);
        Ok(Self::assemble(
            h,
            self.hyper_z.clone(),
            self.z.clone(),
            ycache,
            Arc::clone(&self.zcache),
            prior,
        ))
    }

    /// Replace one secondary-GP hyperparameter: rebuild and refactor C_z;
    /// the main cache is shared untouched.
    pub fn with_hyper_z(
        &self,
        k: usize,
        value: f64,
        data: &RegressionData,
        prior: &PriorSpec,
    ) -> Result<Self, LinalgError> {
        let mut h = self.hyper_z.clone();
        h[k] = value;
        let zcache = Arc::new(build_zcache(&h, data, prior)?);
        Ok(Self::assemble(
            self.hyper_y.clone(),
            h,
            self.z.clone(),
            Arc::clone(&self.ycache),
            zcache,
            prior,
        ))
    }

    /// Replace one latent value: the change to C_y is one diagonal entry, so
    /// the factor gets a rank-1 update (or downdate, falling back to a full
    /// refactorization if the downdate loses positivity).
    pub fn with_latent_rank1(
        &self,
        i: usize,
        value: f64,
        data: &RegressionData,
        prior: &PriorSpec,
    ) -> Result<Self, LinalgError> {
        let n = self.z.len();
        let old_var = (2.0 * self.z[i]).exp();
        let new_var = (2.0 * value).exp();
        let delta = new_var - old_var;
        let mut cov = self.ycache.cov.clone();
        cov.set_sym(i, i, cov.get(i, i) + delta);
        let mut v = vec![0.0; n];
        v[i] = delta.abs().sqrt();
        let chol = if delta >= 0.0 {
            rank1_update(&self.ycache.chol, &v, UpdateSign::Update)?
        } else {
            match rank1_update(&self.ycache.chol, &v, UpdateSign::Downdate) {
                Ok(f) => f,
                Err(_) => cholesky(&cov)?,
            }
        };
        let loglik = mvn_logpdf_chol(&chol, data.y());
        let mut z = self.z.clone();
        z[i] = value;
        Ok(Self::assemble(
            self.hyper_y.clone(),
            self.hyper_z.clone(),
            z,
            Arc::new(YCache { cov, chol, loglik }),
            Arc::clone(&self.zcache),
            prior,
        ))
    }

    /// Replace the whole latent vector (the correlated whole-vector
    /// proposal): rebuild the C_y diagonal and refactor.
    pub fn with_latent_all(
        &self,
        z: &[f64],
        data: &RegressionData,
        prior: &PriorSpec,
    ) -> Result<Self, LinalgError> {
        assert_eq!(z.len(), self.z.len());
        let mut cov = self.ycache.cov.clone();
        for i in 0..z.len() {
            let base = cov.get(i, i) - (2.0 * self.z[i]).exp();
            cov.set_sym(i, i, base + (2.0 * z[i]).exp());
        }
        let chol = cholesky(&cov)?;
        let loglik = mvn_logpdf_chol(&chol, data.y());
        Ok(Self::assemble(
            self.hyper_y.clone(),
            self.hyper_z.clone(),
            z.to_vec(),
            Arc::new(YCache { cov, chol, loglik }),
            Arc::clone(&self.zcache),
            prior,
        ))
    }

    pub fn log_post(&self) -> f64 {
        self.log_post
    }

    /// Main-GP data term log N(y | 0, C_y); the only piece the correlated
    /// z proposal's acceptance ratio involves.
    pub fn main_loglik(&self) -> f64 {
        self.ycache.loglik
    }

    /// Secondary term log N(z | 0, C_z + σ_J² I).
    pub fn z_prior_loglik(&self) -> f64 {
        self.z_prior
    }

    pub fn chol_y(&self) -> &CholFactor {
        &self.ycache.chol
    }

    /// Factor of C_z + σ_J² I, the prior covariance of z.
    pub fn chol_z(&self) -> &CholFactor {
        &self.zcache.chol
    }

    pub fn cov_y(&self) -> &SymMatrix {
        &self.ycache.cov
    }

    pub fn snapshot(&self) -> StateSnapshot {
        let mut hypers = self.hyper_y.clone();
        hypers.extend_from_slice(&self.hyper_z);
        StateSnapshot {
            hypers,
            latent: self.z.clone(),
        }
    }
}

fn build_ycache(
    hyper_y: &[f64],
    z: &[f64],
    data: &RegressionData,
    prior: &PriorSpec,
) -> Result<YCache, LinalgError> {
    let spec = kernel_spec_y(hyper_y, data.p(), prior);
    let mut cov = cov_matrix(&spec, data.x(), None);
    for i in 0..z.len() {
        cov.set_sym(i, i, cov.get(i, i) + (2.0 * z[i]).exp());
    }
    let chol = cholesky(&cov)?;
    let loglik = mvn_logpdf_chol(&chol, data.y());
    Ok(YCache { cov, chol, loglik })
}

fn build_zcache(
    hyper_z: &[f64],
    data: &RegressionData,
    prior: &PriorSpec,
) -> Result<ZCache, LinalgError> {
    let spec = kernel_spec_z(hyper_z, data.p(), prior);
    let cov = cov_matrix(&spec, data.x(), None);
    let chol = cholesky(&cov)?;
    Ok(ZCache { chol })
}

/// Main-GP kernel: no residual term on the diagonal (the per-case variances
/// exp(2 z_i) are added separately).
pub(crate) fn kernel_spec_y(hyper_y: &[f64], p: usize, prior: &PriorSpec) -> KernelSpec {
    KernelSpec::se_ard(
        prior.c,
        hyper_y[0].exp(),
        hyper_y[1..=p].iter().map(|v| v.exp()).collect(),
        0.0,
    )
}

/// Secondary-GP kernel; the fixed jitter σ_J enters as its diagonal term.
pub(crate) fn kernel_spec_z(hyper_z: &[f64], p: usize, prior: &PriorSpec) -> KernelSpec {
    KernelSpec::se_ard(
        prior.c,
        hyper_z[0].exp(),
        hyper_z[1..=p].iter().map(|v| v.exp()).collect(),
        prior.sigma_jitter,
    )
}

/// Total log posterior: main data term, z prior under the secondary GP,
/// hyperpriors on both groups. −∞ when either covariance fails to factor.
pub fn log_post_gplv(
    hyper_y: &[f64],
    hyper_z: &[f64],
    z: &[f64],
    data: &RegressionData,
    prior: &PriorSpec,
) -> f64 {
    match GplvState::new(hyper_y, hyper_z, z, data, prior) {
        Ok(s) => s.log_post(),
        Err(_) => f64::NEG_INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::super::standard::StdState;
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_data(n: usize, seed: u64) -> RegressionData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..1.0)]).collect();
        let y: Vec<f64> = x.iter().map(|r| (4.0 * r[0]).sin()).collect();
        RegressionData::new(x, y)
    }

    #[test]
    fn constant_z_matches_homoscedastic_main_term() {
        // z ≡ κ puts exp(2κ) on every diagonal entry, which is exactly the
        // STD data term with σ = e^κ.
        let data = toy_data(9, 11);
        let prior = PriorSpec::default();
        let kappa = -0.7;
        let g = GplvState::new(
            &[0.4, -0.3],
            &[0.1, 0.2],
            &vec![kappa; 9],
            &data,
            &prior,
        )
        .unwrap();
        let s = StdState::new(&[0.4, -0.3, kappa], &data, &prior).unwrap();
        assert_relative_eq!(g.main_loglik(), s.loglik(), max_relative = 1e-12);
    }

    #[test]
    fn hyper_z_change_leaves_y_factor_untouched() {
        let data = toy_data(7, 12);
        let prior = PriorSpec::default();
        let a = GplvState::new(&[0.0, 0.0], &[0.0, 0.0], &vec![0.1; 7], &data, &prior).unwrap();
        let b = a.with_hyper_z(0, 0.9, &data, &prior).unwrap();
        for i in 0..7 {
            for j in 0..=i {
                assert_eq!(a.chol_y().get(i, j).to_bits(), b.chol_y().get(i, j).to_bits());
            }
        }
        assert_eq!(a.main_loglik().to_bits(), b.main_loglik().to_bits());
    }

    #[test]
    fn latent_rank1_matches_full_recompute() {
        let data = toy_data(14, 13);
        let prior = PriorSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let z0: Vec<f64> = (0..14).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = GplvState::new(&[0.2, -0.4], &[0.0, 0.3], &z0, &data, &prior).unwrap();

        // Both an increase (update) and a decrease (downdate).
        for (i, v) in [(3usize, 0.9f64), (8, -1.6)] {
            let inc = s.with_latent_rank1(i, v, &data, &prior).unwrap();
            let mut z1 = z0.clone();
            z1[i] = v;
            let full = GplvState::new(&[0.2, -0.4], &[0.0, 0.3], &z1, &data, &prior).unwrap();
            assert_relative_eq!(inc.log_post(), full.log_post(), max_relative = 1e-6);
            assert_relative_eq!(
                inc.chol_y().logdet(),
                full.chol_y().logdet(),
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn whole_vector_update_matches_fresh_state() {
        let data = toy_data(10, 15);
        let prior = PriorSpec::default();
        let z0 = vec![0.0; 10];
        let s = GplvState::new(&[0.0, 0.0], &[0.0, 0.0], &z0, &data, &prior).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let z1: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let stepped = s.with_latent_all(&z1, &data, &prior).unwrap();
        let fresh = GplvState::new(&[0.0, 0.0], &[0.0, 0.0], &z1, &data, &prior).unwrap();
        assert_relative_eq!(stepped.log_post(), fresh.log_post(), max_relative = 1e-10);
    }
}
