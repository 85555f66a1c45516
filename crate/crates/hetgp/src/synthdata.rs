//! Synthetic heteroscedastic benchmark generators: two univariate and two
//! trivariate datasets, each in a Gaussian-residual and an extreme-value
//! residual variant, with the noise-free function values and true residual
//! SDs retained for evaluation.
//!
//! The extreme-value residual has density (1/σ) e^{(ω−μ)/σ} exp(−e^{(ω−μ)/σ}),
//! the minimum-type (left-skewed) convention: integrating that density gives
//! mean μ − σγ (Euler's constant γ) and variance π²σ²/6, and the sampler
//! below follows the density rather than the maximum-type mean formula.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::models::RegressionData;

pub const EULER_GAMMA: f64 = 0.5772156649015329;

/// Location-scale extreme value parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvParams {
    pub mu: f64,
    pub sigma: f64,
}

impl EvParams {
    pub fn new(mu: f64, sigma: f64) -> Self {
        assert!(sigma > 0.0, "EV scale must be positive");
        EvParams { mu, sigma }
    }
}

/// Draw from the minimum-type extreme value distribution by inverse CDF:
/// ω = μ + σ log(−log(1−U)).
pub fn ev_sample(params: EvParams, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen();
    params.mu + params.sigma * (-(1.0 - u).ln()).ln()
}

/// An extreme value draw translated and scaled to mean 0 and SD `target_sd`
/// by exact-moment construction: σ = target_sd √6/π and μ = σγ.
pub fn ev_standardized(target_sd: f64, rng: &mut impl Rng) -> f64 {
    assert!(target_sd > 0.0, "target SD must be positive");
    let sigma = target_sd * 6f64.sqrt() / PI;
    ev_sample(EvParams::new(sigma * EULER_GAMMA, sigma), rng)
}

/// The four benchmark datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetKind {
    U1,
    U2,
    M1,
    M2,
}

impl DatasetKind {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetKind::U1 => "U1",
            DatasetKind::U2 => "U2",
            DatasetKind::M1 => "M1",
            DatasetKind::M2 => "M2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "U1" => Some(DatasetKind::U1),
            "U2" => Some(DatasetKind::U2),
            "M1" => Some(DatasetKind::M1),
            "M2" => Some(DatasetKind::M2),
            _ => None,
        }
    }

    pub fn p(&self) -> usize {
        match self {
            DatasetKind::U1 | DatasetKind::U2 => 1,
            DatasetKind::M1 | DatasetKind::M2 => 3,
        }
    }

    pub fn gaussian_residuals(&self) -> bool {
        matches!(self, DatasetKind::U1 | DatasetKind::M1)
    }

    /// Generate a replicate of this dataset.
    pub fn generate(&self, seed: u64, n: usize) -> Dataset {
        match self {
            DatasetKind::U1 => gen_u(seed, n, true),
            DatasetKind::U2 => gen_u(seed, n, false),
            DatasetKind::M1 => gen_m(seed, n, true),
            DatasetKind::M2 => gen_m(seed, n, false),
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
}

/// One generated replicate with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub f_true: Vec<f64>,
    pub sd_true: Vec<f64>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.meta.p
    }

    pub fn to_regression_data(&self) -> RegressionData {
        RegressionData::new(self.x.clone(), self.y.clone())
    }

    /// CSV with header `x1..xp,y,f_true,sd_true`; floats are written in
    /// shortest round-trip form.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header: Vec<String> = (1..=self.p())
            .map(|k| format!("x{k}"))
            .chain(["y".into(), "f_true".into(), "sd_true".into()])
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.n() {
            let mut fields: Vec<String> = self.x[i].iter().map(|v| format!("{v}")).collect();
            fields.push(format!("{}", self.y[i]));
            fields.push(format!("{}", self.f_true[i]));
            fields.push(format!("{}", self.sd_true[i]));
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// The conventional export file name for a replicate.
    pub fn csv_file_name(&self) -> String {
        format!("{}_{}.csv", self.meta.name, self.meta.seed)
    }
}

/// Univariate true function over x ∈ [0, 1].
pub fn u_true_fn(x: f64) -> f64 {
    (1.0 + (4.0 * x).sin()).powf(1.1)
}

/// Univariate residual SD.
pub fn u_sd_fn(x: f64) -> f64 {
    0.2 + 0.3 * (-30.0 * (x - 0.5) * (x - 0.5)).exp()
}

/// Trivariate true function over standard-normal covariates.
pub fn m_true_fn(x: &[f64]) -> f64 {
    (1.0 + (x[0] / 1.5 + 2.0).sin()).powf(0.9)
        - (1.0 + (x[1] / 2.0 + x[2] / 3.0 - 2.0).sin()).powf(1.5)
}

/// Trivariate residual SD.
pub fn m_sd_fn(x: &[f64]) -> f64 {
    0.1 + 0.4 * (-0.2 * (x[0] - 1.0).powi(2) - 0.3 * (x[1] - 2.0).powi(2)).exp()
        + 0.3 * (-0.3 * (x[2] + 2.0).powi(2)).exp()
}

fn residual(sd: f64, gaussian: bool, rng: &mut ChaCha8Rng) -> f64 {
    if gaussian {
        let u: f64 = StandardNormal.sample(rng);
        sd * u
    } else {
        ev_standardized(sd, rng)
    }
}

/// Univariate dataset: x uniform on [0, 1], Gaussian (U1) or standardized
/// extreme-value (U2) residuals with SD `u_sd_fn(x)`.
pub fn gen_u(seed: u64, n: usize, gaussian: bool) -> Dataset {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut f_true = Vec::with_capacity(n);
    let mut sd_true = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: f64 = rng.gen();
        let f = u_true_fn(xi);
        let sd = u_sd_fn(xi);
        y.push(f + residual(sd, gaussian, &mut rng));
        x.push(vec![xi]);
        f_true.push(f);
        sd_true.push(sd);
    }
    Dataset {
        x,
        y,
        f_true,
        sd_true,
        meta: DatasetMeta {
            name: if gaussian { "U1" } else { "U2" }.into(),
            seed,
            n,
            p: 1,
        },
    }
}

/// Trivariate dataset: three independent standard-normal covariates,
/// Gaussian (M1) or standardized extreme-value (M2) residuals with SD
/// `m_sd_fn(x)`.
pub fn gen_m(seed: u64, n: usize, gaussian: bool) -> Dataset {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut f_true = Vec::with_capacity(n);
    let mut sd_true = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
        let f = m_true_fn(&xi);
        let sd = m_sd_fn(&xi);
        y.push(f + residual(sd, gaussian, &mut rng));
        x.push(xi);
        f_true.push(f);
        sd_true.push(sd);
    }
    Dataset {
        x,
        y,
        f_true,
        sd_true,
        meta: DatasetMeta {
            name: if gaussian { "M1" } else { "M2" }.into(),
            seed,
            n,
            p: 3,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ev_sample_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let w = ev_sample(EvParams::new(0.0, 1.0), &mut rng);
            sum += w;
            sum2 += w * w;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        // The printed density is minimum-type: mean −γ, variance π²/6.
        assert!((mean - (-EULER_GAMMA)).abs() < 0.01, "mean {mean}");
        assert!((var - PI * PI / 6.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn ev_standardized_scale_construction() {
        assert_relative_eq!(
            6f64.sqrt() / PI,
            0.779696801233676,
            max_relative = 1e-15
        );
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let n = 1_000_000;
        for target in [1.0, 0.5] {
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..n {
                let w = ev_standardized(target, &mut rng);
                sum += w;
                sum2 += w * w;
            }
            let mean = sum / n as f64;
            let sd = (sum2 / n as f64 - mean * mean).sqrt();
            assert!(mean.abs() < 0.01 * target.max(1.0), "mean {mean}");
            assert!(
                (sd - target).abs() < 0.01 * target.max(1.0) * 2.0,
                "sd {sd} for target {target}"
            );
            assert!((sd / target - 1.0).abs() < 0.02, "sd {sd} target {target}");
        }
    }

    #[test]
    fn ev_standardized_shape_is_left_skewed_mode_right_of_zero() {
        // Standardized minimum-type draws: negative skewness, mode at
        // γ√6/π ≈ 0.45. Check skew sign and that the histogram peaks right
        // of zero.
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| ev_standardized(1.0, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let m2 = draws.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n as f64;
        let m3 = draws.iter().map(|w| (w - mean).powi(3)).sum::<f64>() / n as f64;
        let skew = m3 / m2.powf(1.5);
        assert!(skew < -1.0, "skew {skew}");
        let mut bins = [0usize; 40];
        for w in &draws {
            let b = ((w + 4.0) / 0.2) as isize;
            if (0..40).contains(&b) {
                bins[b as usize] += 1;
            }
        }
        let peak = bins.iter().enumerate().max_by_key(|(_, c)| **c).unwrap().0;
        let mode = -4.0 + 0.2 * (peak as f64 + 0.5);
        assert!((mode - 0.45).abs() < 0.2, "mode {mode}");
    }

    #[test]
    fn u_true_values() {
        assert_relative_eq!(u_true_fn(0.5), 2.0368589045228527, max_relative = 1e-14);
        assert_relative_eq!(u_sd_fn(0.5), 0.5, max_relative = 1e-12);
        assert_relative_eq!(u_sd_fn(100.0), 0.2, max_relative = 1e-12);
    }

    #[test]
    fn m_true_values() {
        assert_relative_eq!(
            m_true_fn(&[0.0, 0.0, 0.0]),
            1.7624079122336318,
            max_relative = 1e-14
        );
        assert_relative_eq!(m_sd_fn(&[1.0, 2.0, -2.0]), 0.8, max_relative = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-4.0..4.0)).collect();
            assert!(m_sd_fn(&x) > 0.1);
        }
    }

    #[test]
    fn gaussian_residuals_pass_moment_check() {
        let d = gen_u(7, 10_000, true);
        let std_res: Vec<f64> = (0..d.n())
            .map(|i| (d.y[i] - d.f_true[i]) / d.sd_true[i])
            .collect();
        let mean = std_res.iter().sum::<f64>() / std_res.len() as f64;
        let m2 = std_res.iter().map(|r| (r - mean).powi(2)).sum::<f64>()
            / std_res.len() as f64;
        let m3 = std_res.iter().map(|r| (r - mean).powi(3)).sum::<f64>()
            / std_res.len() as f64;
        let skew = m3 / m2.powf(1.5);
        assert!(skew.abs() < 0.2, "skew {skew}");
        assert!(mean.abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn regeneration_is_bit_identical() {
        for kind in [DatasetKind::U1, DatasetKind::U2, DatasetKind::M1, DatasetKind::M2] {
            let a = kind.generate(11, 50);
            let b = kind.generate(11, 50);
            assert_eq!(a, b);
            let c = kind.generate(12, 50);
            assert_ne!(a.y, c.y);
        }
    }

    #[test]
    fn binned_residual_sd_tracks_truth() {
        // Empirical residual SD within bins stays within 25% of the mean
        // true SD in that bin. U-datasets bin on x, M-datasets on sd_true.
        for kind in [DatasetKind::U1, DatasetKind::U2, DatasetKind::M1, DatasetKind::M2] {
            let d = kind.generate(5, 10_000);
            let nbins = 10;
            let key = |i: usize| -> f64 {
                if d.p() == 1 {
                    d.x[i][0]
                } else {
                    d.sd_true[i]
                }
            };
            let (lo, hi) = (0..d.n()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), i| {
                (a.min(key(i)), b.max(key(i)))
            });
            let mut sums = vec![0.0; nbins];
            let mut sq = vec![0.0; nbins];
            let mut sd_sum = vec![0.0; nbins];
            let mut count = vec![0usize; nbins];
            for i in 0..d.n() {
                let b = (((key(i) - lo) / (hi - lo) * nbins as f64) as usize).min(nbins - 1);
                let r = d.y[i] - d.f_true[i];
                sums[b] += r;
                sq[b] += r * r;
                sd_sum[b] += d.sd_true[i];
                count[b] += 1;
            }
            for b in 0..nbins {
                if count[b] < 200 {
                    continue;
                }
                let m = sums[b] / count[b] as f64;
                let emp_sd = (sq[b] / count[b] as f64 - m * m).sqrt();
                let true_sd = sd_sum[b] / count[b] as f64;
                let ratio = emp_sd / true_sd;
                assert!(
                    (0.75..=1.25).contains(&ratio),
                    "{kind}: bin {b} ratio {ratio} ({} cases)",
                    count[b]
                );
            }
        }
    }

    #[test]
    fn residual_mean_near_zero() {
        for kind in [DatasetKind::U2, DatasetKind::M2] {
            let d = kind.generate(3, 100_000);
            let std_res: Vec<f64> = (0..d.n())
                .map(|i| (d.y[i] - d.f_true[i]) / d.sd_true[i])
                .collect();
            let mean = std_res.iter().sum::<f64>() / std_res.len() as f64;
            let sd = (std_res.iter().map(|r| (r - mean).powi(2)).sum::<f64>()
                / std_res.len() as f64)
                .sqrt();
            assert!(mean.abs() < 0.02, "{kind}: mean {mean}");
            assert!((sd - 1.0).abs() < 0.02, "{kind}: sd {sd}");
        }
    }

    #[test]
    fn csv_export_round_trips() {
        let d = gen_u(9, 20, false);
        let dir = std::env::temp_dir().join("hetgp_synthdata_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(d.csv_file_name());
        d.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x1,y,f_true,sd_true");
        for (i, line) in lines.enumerate() {
            let fields: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(fields[0], d.x[i][0]);
            assert_eq!(fields[1], d.y[i]);
            assert_eq!(fields[2], d.f_true[i]);
            assert_eq!(fields[3], d.sd_true[i]);
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
