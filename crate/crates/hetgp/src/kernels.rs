//! Covariance functions: squared-exponential with isotropic or per-dimension
//! (ARD) length-scales, a linear ARD form, and their sum, plus the
//! equivalence constructions that express a latent-covariate GP as standard
//! GP regression with a richer kernel.
//!
//! Scalar kernels never include the residual term; `cov_matrix` adds σ² on
//! the diagonal only, so the same spec serves for test-vs-train
//! cross-covariance vectors, which never receive σ².

use crate::linalg::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// c² + η² exp(−‖a−b‖²/ρ²), one shared length-scale.
    SeIso,
    /// c² + η² exp(−Σ_k (a_k−b_k)²/ρ_k²), one length-scale per dimension.
    SeArd,
    /// Σ_k γ_k² a_k b_k.
    LinearArd,
    /// SeArd + LinearArd over the same inputs.
    Sum,
}

/// A covariance-function family with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Constant offset amplitude; enters as c².
    pub c: f64,
    /// Signal amplitude η.
    pub eta: f64,
    /// Length-scales ρ_1..ρ_d.
    pub rho: Vec<f64>,
    /// Linear weights γ_1..γ_d (LinearArd and Sum only).
    pub gamma: Vec<f64>,
    /// Residual / jitter SD σ; applied by `cov_matrix` on the diagonal only.
    pub sigma: f64,
}

impl KernelSpec {
    pub fn se_iso(c: f64, eta: f64, rho: f64, sigma: f64) -> Self {
        let s = KernelSpec {
            family: KernelFamily::SeIso,
            c,
            eta,
            rho: vec![rho],
            gamma: Vec::new(),
            sigma,
        };
        s.validate();
        s
    }

    pub fn se_ard(c: f64, eta: f64, rho: Vec<f64>, sigma: f64) -> Self {
        let s = KernelSpec {
            family: KernelFamily::SeArd,
            c,
            eta,
            rho,
            gamma: Vec::new(),
            sigma,
        };
        s.validate();
        s
    }

    pub fn linear_ard(gamma: Vec<f64>) -> Self {
        KernelSpec {
            family: KernelFamily::LinearArd,
            c: 0.0,
            eta: 1.0,
            rho: Vec::new(),
            gamma,
            sigma: 0.0,
        }
    }

    pub fn sum(c: f64, eta: f64, rho: Vec<f64>, gamma: Vec<f64>, sigma: f64) -> Self {
        let s = KernelSpec {
            family: KernelFamily::Sum,
            c,
            eta,
            rho,
            gamma,
            sigma,
        };
        s.validate();
        s
    }

    fn validate(&self) {
        assert!(self.c >= 0.0, "c must be non-negative");
        assert!(self.sigma >= 0.0, "sigma must be non-negative");
        match self.family {
            KernelFamily::LinearArd => {}
            _ => {
                assert!(self.eta > 0.0, "eta must be positive");
                assert!(
                    self.rho.iter().all(|&r| r > 0.0),
                    "all length-scales must be positive"
                );
            }
        }
    }

    /// Scalar kernel value between two full input vectors.
    pub fn value(&self, a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len(), "input dimensions differ");
        match self.family {
            KernelFamily::SeIso => {
                let rho = self.rho[0];
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                self.c * self.c + self.eta * self.eta * (-d2 / (rho * rho)).exp()
            }
            KernelFamily::SeArd => self.c * self.c + self.eta * self.eta * self.se_ard_exp(a, b),
            KernelFamily::LinearArd => self.linear_part(a, b),
            KernelFamily::Sum => {
                self.c * self.c
                    + self.eta * self.eta * self.se_ard_exp(a, b)
                    + self.linear_part(a, b)
            }
        }
    }

    #[inline]
    fn se_ard_exp(&self, a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), self.rho.len(), "input dimension must match rho");
        let mut s = 0.0;
        for ((x, y), r) in a.iter().zip(b).zip(&self.rho) {
            let d = (x - y) / r;
            s += d * d;
        }
        (-s).exp()
    }

    #[inline]
    fn linear_part(&self, a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), self.gamma.len(), "input dimension must match gamma");
        a.iter()
            .zip(b)
            .zip(&self.gamma)
            .map(|((x, y), g)| g * g * x * y)
            .sum()
    }
}

/// SE-ARD kernel value (named entry point for the common case).
pub fn cov_se_ard(spec: &KernelSpec, a: &[f64], b: &[f64]) -> f64 {
    spec.value(a, b)
}

/// SE-ARD over the augmented input (x, w); the latent covariate gets the
/// last length-scale ρ_{p+1}.
pub fn cov_gplc(spec: &KernelSpec, x_i: &[f64], w_i: f64, x_j: &[f64], w_j: f64) -> f64 {
    assert_eq!(
        spec.rho.len(),
        x_i.len() + 1,
        "gplc kernel needs p+1 length-scales"
    );
    let mut a = Vec::with_capacity(x_i.len() + 1);
    a.extend_from_slice(x_i);
    a.push(w_i);
    let mut b = Vec::with_capacity(x_j.len() + 1);
    b.extend_from_slice(x_j);
    b.push(w_j);
    spec.value(&a, &b)
}

/// K1(x_i, x_j) + σ² w_i w_j: the kernel under which a latent-covariate GP
/// with g(x, w) = h(x) + σw reduces to standard GP regression on K1.
pub fn cov_equiv_linear_w(
    k1: &KernelSpec,
    sigma: f64,
    x_i: &[f64],
    w_i: f64,
    x_j: &[f64],
    w_j: f64,
) -> f64 {
    k1.value(x_i, x_j) + sigma * sigma * w_i * w_j
}

/// K1(x_i, x_j) + w_i w_j K2(x_i, x_j): the kernel under which a
/// latent-covariate GP with g(x, w) = h1(x) + w·h2(x) matches a
/// latent-variance model with SD |h2(x)|.
pub fn cov_equiv_product(
    k1: &KernelSpec,
    k2: &KernelSpec,
    x_i: &[f64],
    w_i: f64,
    x_j: &[f64],
    w_j: f64,
) -> f64 {
    k1.value(x_i, x_j) + w_i * w_j * k2.value(x_i, x_j)
}

/// Full covariance matrix over inputs (with optional per-case latent values
/// appended as an extra dimension), plus σ² on the diagonal.
pub fn cov_matrix(spec: &KernelSpec, x: &[Vec<f64>], w: Option<&[f64]>) -> SymMatrix {
    let n = x.len();
    let p = if n > 0 { x[0].len() } else { 0 };
    assert!(x.iter().all(|r| r.len() == p), "inputs must be homogeneous");
    let d = p + usize::from(w.is_some());
    // Flatten (and augment) once so the inner loop works on contiguous rows.
    let mut aug = vec![0.0; n * d];
    for i in 0..n {
        aug[i * d..i * d + p].copy_from_slice(&x[i]);
        if let Some(wv) = w {
            assert_eq!(wv.len(), n, "latent vector length must match inputs");
            aug[i * d + p] = wv[i];
        }
    }
    let s2 = spec.sigma * spec.sigma;
    SymMatrix::from_fn(n, |i, j| {
        let v = spec.value(&aug[i * d..(i + 1) * d], &aug[j * d..(j + 1) * d]);
        if i == j {
            v + s2
        } else {
            v
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cholesky;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn se_ard_zero_distance() {
        let k = KernelSpec::se_ard(0.5, 3.0, vec![0.8, 3.0], 0.0);
        assert_relative_eq!(
            k.value(&[1.0, 2.0], &[1.0, 2.0]),
            0.25 + 9.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn se_ard_far_limit_is_c_squared() {
        let k = KernelSpec::se_ard(0.5, 3.0, vec![0.8, 3.0], 0.0);
        let v = k.value(&[0.0, 0.0], &[1e6, 0.0]);
        assert_relative_eq!(v, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn se_ard_direct_evaluation() {
        // eta=3, rho=(0.8, 3): unit scaled distance in the first coordinate.
        let k = KernelSpec::se_ard(0.0, 3.0, vec![0.8, 3.0], 0.0);
        let v = k.value(&[0.0, 0.0], &[0.8, 0.0]);
        assert_relative_eq!(v, 3.310914970542981, max_relative = 1e-14);
    }

    #[test]
    fn gplc_kernel_cases() {
        let k = KernelSpec::se_ard(0.5, 2.0, vec![1.0, 1.0], 0.0);
        assert_relative_eq!(
            cov_gplc(&k, &[1.3], 0.7, &[1.3], 0.7),
            0.25 + 4.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            cov_gplc(&k, &[1.3], 1e8, &[1.3], 0.0),
            0.25,
            max_relative = 1e-12
        );
        let unit = KernelSpec::se_ard(0.0, 1.0, vec![1.0, 1.0], 0.0);
        assert_relative_eq!(
            cov_gplc(&unit, &[0.4], 1.0, &[0.4], 0.0),
            0.36787944117144233,
            max_relative = 1e-14
        );
    }

    #[test]
    fn equiv_linear_w_cases() {
        let k1 = KernelSpec::se_iso(0.0, 1.0, 1.0, 0.0);
        let base = k1.value(&[0.3], &[0.9]);
        assert_eq!(cov_equiv_linear_w(&k1, 0.7, &[0.3], 0.0, &[0.9], 2.0), base);
        assert_eq!(cov_equiv_linear_w(&k1, 0.0, &[0.3], 1.5, &[0.9], 2.0), base);
        // K1 at zero distance is 1; add 0.5^2 * 2 * 2.
        assert_relative_eq!(
            cov_equiv_linear_w(&k1, 0.5, &[0.3], 2.0, &[0.3], 2.0),
            2.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn equiv_product_cases() {
        let k1 = KernelSpec::se_iso(0.0, 1.0, 1.0, 0.0);
        let k2 = KernelSpec::se_iso(0.0, 1.0, 1.0, 0.0);
        let base = k1.value(&[0.3], &[0.9]);
        assert_eq!(
            cov_equiv_product(&k1, &k2, &[0.3], 0.0, &[0.9], 5.0),
            base
        );
        // 1 + 1*2*1 at zero distance.
        assert_relative_eq!(
            cov_equiv_product(&k1, &k2, &[0.3], 1.0, &[0.3], 2.0),
            3.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn cov_matrix_single_and_duplicate_inputs() {
        let k = KernelSpec::se_iso(0.1, 2.0, 1.0, 0.3);
        let m1 = cov_matrix(&k, &[vec![0.5]], None);
        assert_relative_eq!(m1.get(0, 0), 0.01 + 4.0 + 0.09, max_relative = 1e-15);

        let m2 = cov_matrix(&k, &[vec![0.5], vec![0.5]], None);
        assert_relative_eq!(m2.get(0, 1), 0.01 + 4.0, max_relative = 1e-15);
        assert_relative_eq!(m2.get(0, 0), 0.01 + 4.0 + 0.09, max_relative = 1e-15);
    }

    #[test]
    fn cov_matrix_matches_scalar_kernel() {
        let k = KernelSpec::se_ard(0.0, 3.0, vec![0.8, 3.0], 0.2);
        let x: Vec<Vec<f64>> = vec![vec![0.1], vec![0.4], vec![0.5], vec![0.9], vec![1.4]];
        let w = [0.3, -1.0, 0.0, 2.0, 0.5];
        let m = cov_matrix(&k, &x, Some(&w));
        for i in 0..5 {
            for j in 0..5 {
                let mut expect = cov_gplc(&k, &x[i], w[i], &x[j], w[j]);
                if i == j {
                    expect += 0.04;
                }
                assert_relative_eq!(m.get(i, j), expect, max_relative = 1e-14);
            }
        }
    }

    /// Jacobi eigenvalue iteration; independent of the Cholesky path.
    fn min_eigenvalue(m: &SymMatrix) -> f64 {
        let n = m.dim();
        let mut a: Vec<f64> = (0..n * n).map(|ij| m.get(ij / n, ij % n)).collect();
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq.abs() < 1e-18 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n)
            .map(|i| a[i * n + i])
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn generated_matrices_are_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..20 {
            let p = rng.gen_range(1..=3);
            let n = rng.gen_range(2..=30);
            let eta = rng.gen_range(0.2..3.0);
            let rho: Vec<f64> = (0..p).map(|_| rng.gen_range(0.3..3.0)).collect();
            let k = KernelSpec::se_ard(0.1, eta, rho, 0.0);
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let m = cov_matrix(&k, &x, None);
            let lam = min_eigenvalue(&m);
            assert!(lam >= -1e-10, "trial {trial}: min eigenvalue {lam}");
        }
    }

    #[test]
    fn latent_covariate_marginal_covariance_matches_equiv_kernel() {
        // y_i = h(x_i) + sigma_w * w_i with h ~ GP(0, K1) and w_i iid N(0,1)
        // has marginal Cov(y_i, y_j) = K1(x_i, x_j) + sigma_w^2 δ_ij.
        let k1 = KernelSpec::se_iso(0.1, 1.0, 1.0, 0.0);
        let x: Vec<Vec<f64>> = vec![vec![0.0], vec![0.5], vec![1.1], vec![1.6], vec![2.4]];
        let n = x.len();
        let sigma_w = 0.6;
        let kmat = cov_matrix(&k1, &x, None);
        let chol = cholesky(&kmat).unwrap();

        let draws = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut sums = vec![0.0; n];
        let mut prods = vec![0.0; n * n];
        let mut y = vec![0.0; n];
        for _ in 0..draws {
            let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            for i in 0..n {
                let mut h = 0.0;
                for j in 0..=i {
                    h += chol.get(i, j) * u[j];
                }
                let w: f64 = StandardNormal.sample(&mut rng);
                y[i] = h + sigma_w * w;
            }
            for i in 0..n {
                sums[i] += y[i];
                for j in 0..n {
                    prods[i * n + j] += y[i] * y[j];
                }
            }
        }
        let m = draws as f64;
        for i in 0..n {
            for j in 0..n {
                let cov = prods[i * n + j] / m - (sums[i] / m) * (sums[j] / m);
                let expect =
                    cov_equiv_linear_w(&k1, sigma_w, &x[i], 0.0, &x[j], 0.0)
                        + if i == j { sigma_w * sigma_w } else { 0.0 }
                        - sigma_w * sigma_w * 0.0;
                let kii = kmat.get(i, i) + sigma_w * sigma_w;
                let kjj = kmat.get(j, j) + sigma_w * sigma_w;
                let se = ((kii * kjj + expect * expect) / m).sqrt();
                assert!(
                    (cov - expect).abs() < 3.0 * se,
                    "cov({i},{j}) = {cov}, expected {expect} ± {}",
                    3.0 * se
                );
            }
        }
    }

    #[test]
    fn sum_kernel_limits_to_equiv_linear_w() {
        // rho_{p+1} -> inf and gamma_1..p -> 0 leaves K1(x) + gamma_{p+1}^2 w w'.
        let p = 2;
        let rho_x = vec![0.9, 1.7];
        let sigma_w = 0.5;
        let mut rho = rho_x.clone();
        rho.push(1e6);
        let sum = KernelSpec::sum(0.1, 1.3, rho, vec![0.0, 0.0, sigma_w], 0.0);
        let k1 = KernelSpec::se_ard(0.1, 1.3, rho_x, 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let xi: Vec<f64> = (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let xj: Vec<f64> = (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let wi: f64 = rng.gen_range(-3.0..3.0);
            let wj: f64 = rng.gen_range(-3.0..3.0);
            let mut ai = xi.clone();
            ai.push(wi);
            let mut aj = xj.clone();
            aj.push(wj);
            let lhs = sum.value(&ai, &aj);
            let rhs = cov_equiv_linear_w(&k1, sigma_w, &xi, wi, &xj, wj);
            assert!((lhs - rhs).abs() < 1e-6, "lhs {lhs} rhs {rhs}");
        }
    }
}
