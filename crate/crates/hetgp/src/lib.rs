//! Gaussian process regression with heteroscedastic or non-Gaussian residuals.
//!
//! Three regression models over a shared linear-algebra core:
//!
//! * **STD** — standard GP regression with constant residual variance,
//! * **GPLC** — GP regression with a latent covariate: each case carries an
//!   unobserved standard-normal input, so the function's changing slope along
//!   that direction induces input-dependent (and possibly non-Gaussian)
//!   residuals,
//! * **GPLV** — GP regression with a latent variance: a secondary GP models
//!   the log residual standard deviation per case.
//!
//! Inference is by MCMC (univariate step-out slice sampling, random-walk
//! Metropolis, and a correlated whole-vector proposal for the GPLV latents).
//! The crate also ships synthetic heteroscedastic benchmark generators and
//! the MSE / NLPD / autocorrelation-time metrics used to compare the models.

pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod predict;
pub mod samplers;
pub mod synthdata;
