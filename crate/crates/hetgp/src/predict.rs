//! Posterior predictive summaries: per test case, a Monte-Carlo mixture of
//! Gaussian components, one per stored posterior draw (times one auxiliary
//! latent draw per component where the model needs it), pooled by the
//! mixture-moment identities.
//!
//! Components describe the response (residual variance included), since the
//! predictive density is evaluated against observed test responses; pooled
//! means are what the squared-error metric uses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{cholesky, solve_chol, solve_lower, CholFactor};
use crate::models::{PriorSpec, RegressionData, StateSnapshot};
use crate::models::{gplc_kernel_spec, gplv_kernel_spec_y, gplv_kernel_spec_z, std_kernel_spec};

/// Per-test-case Monte-Carlo mixture: every (μ̂, σ̂²) component plus the
/// pooled mean and variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSummary {
    pub components: Vec<(f64, f64)>,
    pub mean: f64,
    pub variance: f64,
}

impl PredictiveSummary {
    /// Pool components by the mixture moments: the mean of means, and the
    /// mean of (variance + mean²) minus the squared pooled mean.
    pub fn from_components(components: Vec<(f64, f64)>) -> Self {
        assert!(!components.is_empty(), "need at least one component");
        let m = components.len() as f64;
        let mean = components.iter().map(|(mu, _)| mu).sum::<f64>() / m;
        let second = components
            .iter()
            .map(|(mu, var)| var + mu * mu)
            .sum::<f64>()
            / m;
        PredictiveSummary {
            mean,
            variance: second - mean * mean,
            components,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian conditional of one unobserved value given a vector with prior
/// covariance factored by `chol`: mean kᵀ C⁻¹ obs, variance v − kᵀ C⁻¹ k.
pub(crate) fn conditional_gaussian(
    chol: &CholFactor,
    k: &[f64],
    v: f64,
    alpha: &[f64],
) -> (f64, f64) {
    let mean = dot(k, alpha);
    let u = solve_lower(chol, k);
    let var = v - dot(&u, &u);
    (mean, var)
}

/// Predictive mixture for the standard model: one component per stored
/// draw, averaging over the hyperparameter posterior.
pub fn predict_std(
    draws: &[&StateSnapshot],
    data: &RegressionData,
    prior: &PriorSpec,
    test_inputs: &[Vec<f64>],
) -> Vec<PredictiveSummary> {
    assert!(!draws.is_empty(), "need at least one post-burn-in draw");
    let mut comps: Vec<Vec<(f64, f64)>> =
        vec![Vec::with_capacity(draws.len()); test_inputs.len()];
    for snap in draws {
        let spec = std_kernel_spec(&snap.hypers, data.p(), prior);
        let cov = crate::kernels::cov_matrix(&spec, data.x(), None);
        let chol = cholesky(&cov).expect("stored draw must refactorize");
        let alpha = solve_chol(&chol, data.y());
        let s2 = spec.sigma * spec.sigma;
        let v = spec.c * spec.c + spec.eta * spec.eta;
        let mut k = vec![0.0; data.n()];
        for (case, xstar) in test_inputs.iter().enumerate() {
            for (i, xi) in data.x().iter().enumerate() {
                k[i] = spec.value(xstar, xi);
            }
            let (mu, cond_var) = conditional_gaussian(&chol, &k, v, &alpha);
            comps[case].push((mu, cond_var.max(0.0) + s2));
        }
    }
    comps
        .into_iter()
        .map(PredictiveSummary::from_components)
        .collect()
}

/// Predictive mixture for the latent-covariate model: per draw, `n_wstar`
/// prior draws of the test case's latent value, each giving one component
/// over the augmented input. Per-test-case RNG substreams keep results
/// independent of evaluation order.
pub fn predict_gplc(
    draws: &[&StateSnapshot],
    data: &RegressionData,
    prior: &PriorSpec,
    test_inputs: &[Vec<f64>],
    n_wstar: usize,
    seed: u64,
) -> Vec<PredictiveSummary> {
    assert!(!draws.is_empty(), "need at least one post-burn-in draw");
    assert!(n_wstar >= 1, "need at least one latent draw per component");
    let p = data.p();
    let mut case_rngs: Vec<ChaCha8Rng> = (0..test_inputs.len())
        .map(|case| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(case as u64 + 1);
            r
        })
        .collect();
    let mut comps: Vec<Vec<(f64, f64)>> =
        vec![Vec::with_capacity(draws.len() * n_wstar); test_inputs.len()];
    let mut aug_star = vec![0.0; p + 1];
    let mut k = vec![0.0; data.n()];
    let mut aug_train = vec![0.0; data.n() * (p + 1)];
    for snap in draws {
        let spec = gplc_kernel_spec(&snap.hypers, p, prior);
        let cov = crate::kernels::cov_matrix(&spec, data.x(), Some(&snap.latent));
        let chol = cholesky(&cov).expect("stored draw must refactorize");
        let alpha = solve_chol(&chol, data.y());
        let s2 = spec.sigma * spec.sigma;
        let v = spec.c * spec.c + spec.eta * spec.eta;
        for (i, xi) in data.x().iter().enumerate() {
            aug_train[i * (p + 1)..i * (p + 1) + p].copy_from_slice(xi);
            aug_train[i * (p + 1) + p] = snap.latent[i];
        }
        for (case, xstar) in test_inputs.iter().enumerate() {
            let rng = &mut case_rngs[case];
            for _ in 0..n_wstar {
                let wstar: f64 = StandardNormal.sample(rng);
                aug_star[..p].copy_from_slice(xstar);
                aug_star[p] = wstar;
                for (i, k_i) in k.iter_mut().enumerate() {
                    *k_i = spec.value(&aug_star, &aug_train[i * (p + 1)..(i + 1) * (p + 1)]);
                }
                let (mu, cond_var) = conditional_gaussian(&chol, &k, v, &alpha);
                comps[case].push((mu, cond_var.max(0.0) + s2));
            }
        }
    }
    comps
        .into_iter()
        .map(PredictiveSummary::from_components)
        .collect()
}

/// Predictive mixture for the latent-variance model: per draw, the test
/// case's log residual SD is sampled from its secondary-GP conditional and
/// its variance exp(2 z*) is added to the main-GP conditional variance.
pub fn predict_gplv(
    draws: &[&StateSnapshot],
    data: &RegressionData,
    prior: &PriorSpec,
    test_inputs: &[Vec<f64>],
    seed: u64,
) -> Vec<PredictiveSummary> {
    assert!(!draws.is_empty(), "need at least one post-burn-in draw");
    let p = data.p();
    let jitter2 = prior.sigma_jitter * prior.sigma_jitter;
    let mut case_rngs: Vec<ChaCha8Rng> = (0..test_inputs.len())
        .map(|case| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(case as u64 + 1);
            r
        })
        .collect();
    let mut comps: Vec<Vec<(f64, f64)>> =
        vec![Vec::with_capacity(draws.len()); test_inputs.len()];
    let mut ky = vec![0.0; data.n()];
    let mut kz = vec![0.0; data.n()];
    for snap in draws {
        let hy = &snap.hypers[..p + 1];
        let hz = &snap.hypers[p + 1..];
        let spec_y = gplv_kernel_spec_y(hy, p, prior);
        let spec_z = gplv_kernel_spec_z(hz, p, prior);
        let mut cov_y = crate::kernels::cov_matrix(&spec_y, data.x(), None);
        for i in 0..data.n() {
            cov_y.set_sym(i, i, cov_y.get(i, i) + (2.0 * snap.latent[i]).exp());
        }
        let chol_y = cholesky(&cov_y).expect("stored draw must refactorize");
        let alpha_y = solve_chol(&chol_y, data.y());
        let cov_z = crate::kernels::cov_matrix(&spec_z, data.x(), None);
        let chol_z = cholesky(&cov_z).expect("stored draw must refactorize");
        let alpha_z = solve_chol(&chol_z, &snap.latent);
        let vy = spec_y.c * spec_y.c + spec_y.eta * spec_y.eta;
        let vz = spec_z.c * spec_z.c + spec_z.eta * spec_z.eta + jitter2;
        for (case, xstar) in test_inputs.iter().enumerate() {
            for (i, xi) in data.x().iter().enumerate() {
                ky[i] = spec_y.value(xstar, xi);
                kz[i] = spec_z.value(xstar, xi);
            }
            let (mu, cond_var_y) = conditional_gaussian(&chol_y, &ky, vy, &alpha_y);
            let (zmean, zvar) = conditional_gaussian(&chol_z, &kz, vz, &alpha_z);
            // Rounding can push the conditional variance below the jitter
            // floor the model guarantees.
            let zvar = zvar.max(jitter2);
            let u: f64 = StandardNormal.sample(&mut case_rngs[case]);
            let zstar = zmean + zvar.sqrt() * u;
            comps[case].push((mu, cond_var_y.max(0.0) + (2.0 * zstar).exp()));
        }
    }
    comps
        .into_iter()
        .map(PredictiveSummary::from_components)
        .collect()
}
