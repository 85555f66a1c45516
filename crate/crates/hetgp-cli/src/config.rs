//! Declarative experiment configuration: one TOML file with `[experiment]`,
//! `[prior]`, `[tuning]`, and `[study]` sections. Unknown keys are rejected
//! so typos surface as config errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use hetgp::models::{ModelKind, PriorSpec};
use hetgp::samplers::{CorrPropConfig, SamplerKind, ScheduleConfig, SliceConfig};
use hetgp::synthdata::DatasetKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

/// Sampler selection in config: `default` resolves per model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerChoice {
    Default,
    Slice,
    Metropolis,
    ModifiedMetropolis,
}

impl SamplerChoice {
    pub fn resolve(&self, model: ModelKind) -> SamplerKind {
        match self {
            SamplerChoice::Default => match model {
                ModelKind::Std | ModelKind::Gplc => SamplerKind::Slice,
                ModelKind::Gplv => SamplerKind::ModifiedMetropolis,
            },
            SamplerChoice::Slice => SamplerKind::Slice,
            SamplerChoice::Metropolis => SamplerKind::Metropolis,
            SamplerChoice::ModifiedMetropolis => SamplerKind::ModifiedMetropolis,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub datasets: Vec<String>,
    pub models: Vec<String>,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerChoice,
    pub seeds: Vec<u64>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_n_iter")]
    pub n_iter: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    #[serde(default = "default_n_wstar")]
    pub n_wstar: usize,
    pub out_dir: PathBuf,
    /// Worker threads for grid cells; 0 means all available.
    #[serde(default)]
    pub workers: usize,
}

fn default_sampler() -> SamplerChoice {
    SamplerChoice::Default
}
fn default_n() -> usize {
    100
}
fn default_n_test() -> usize {
    1000
}
fn default_n_iter() -> usize {
    2000
}
fn default_thin() -> usize {
    5
}
fn default_n_wstar() -> usize {
    10
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSection {
    pub log_mean: f64,
    pub log_sd: f64,
    pub c: f64,
    pub sigma_jitter: f64,
    pub sigma_floor: f64,
}

impl Default for PriorSection {
    fn default() -> Self {
        let p = PriorSpec::default();
        PriorSection {
            log_mean: p.log_mean,
            log_sd: p.log_sd,
            c: p.c,
            sigma_jitter: p.sigma_jitter,
            sigma_floor: p.sigma_floor,
        }
    }
}

impl PriorSection {
    pub fn to_spec(self) -> PriorSpec {
        PriorSpec {
            log_mean: self.log_mean,
            log_sd: self.log_sd,
            c: self.c,
            sigma_jitter: self.sigma_jitter,
            sigma_floor: self.sigma_floor,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuningSection {
    pub slice_width: f64,
    /// 0 disables the step-out cap (indefinite stepping-out).
    pub slice_max_stepouts: u32,
    pub metro_initial_sd: f64,
    pub corr_a: f64,
    pub corr_m: usize,
    pub tune_during_burnin: bool,
}

impl Default for TuningSection {
    fn default() -> Self {
        TuningSection {
            slice_width: 1.0,
            slice_max_stepouts: 0,
            metro_initial_sd: 0.5,
            corr_a: 0.3,
            corr_m: 40,
            tune_during_burnin: true,
        }
    }
}

/// Parameters for the GPLV sampler-efficiency study.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    pub dataset: String,
    pub data_seed: u64,
    pub repeats: usize,
    pub chain_seed_base: u64,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            dataset: "U1".into(),
            data_seed: 1,
            repeats: 5,
            chain_seed_base: 1000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub prior: PriorSection,
    #[serde(default)]
    pub tuning: TuningSection,
    #[serde(default)]
    pub study: StudySection,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Config = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        if let Ok(dir) = std::env::var("HETGP_OUT_DIR") {
            if !dir.is_empty() {
                cfg.experiment.out_dir = PathBuf::from(dir);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn datasets(&self) -> Vec<DatasetKind> {
        self.experiment
            .datasets
            .iter()
            .map(|d| DatasetKind::from_name(d).expect("validated"))
            .collect()
    }

    pub fn models(&self) -> Vec<ModelKind> {
        self.experiment
            .models
            .iter()
            .map(|m| parse_model(m).expect("validated"))
            .collect()
    }

    pub fn schedule_for(&self, model: ModelKind) -> ScheduleConfig {
        let t = &self.tuning;
        ScheduleConfig {
            sampler: self.experiment.sampler.resolve(model),
            slice: SliceConfig {
                width: t.slice_width,
                max_stepouts: (t.slice_max_stepouts > 0).then_some(t.slice_max_stepouts),
            },
            metro_initial_sd: t.metro_initial_sd,
            corr: CorrPropConfig {
                a: t.corr_a,
                m: t.corr_m,
            },
            thin: self.experiment.thin,
            tune_during_burnin: t.tune_during_burnin,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.experiment;
        if e.seeds.is_empty() {
            return Err(invalid("experiment.seeds", "must not be empty"));
        }
        if e.datasets.is_empty() {
            return Err(invalid("experiment.datasets", "must not be empty"));
        }
        for d in &e.datasets {
            if DatasetKind::from_name(d).is_none() {
                return Err(invalid(
                    "experiment.datasets",
                    format!("unknown dataset `{d}` (expected U1, U2, M1, or M2)"),
                ));
            }
        }
        if e.models.is_empty() {
            return Err(invalid("experiment.models", "must not be empty"));
        }
        for m in &e.models {
            let kind = parse_model(m).ok_or_else(|| {
                invalid(
                    "experiment.models",
                    format!("unknown model `{m}` (expected STD, GPLC, or GPLV)"),
                )
            })?;
            if e.sampler == SamplerChoice::ModifiedMetropolis && kind != ModelKind::Gplv {
                return Err(invalid(
                    "experiment.sampler",
                    format!("modified-metropolis applies to GPLV only, not {m}"),
                ));
            }
        }
        if e.n < 2 {
            return Err(invalid("experiment.n", "need at least 2 training cases"));
        }
        if e.n_test < 1 {
            return Err(invalid("experiment.n_test", "need at least 1 test case"));
        }
        if e.n_iter < 4 {
            return Err(invalid("experiment.n_iter", "need at least 4 iterations"));
        }
        if e.thin < 1 {
            return Err(invalid("experiment.thin", "must be at least 1"));
        }
        if e.n_wstar < 1 {
            return Err(invalid("experiment.n_wstar", "must be at least 1"));
        }
        if self.prior.log_sd <= 0.0 {
            return Err(invalid("prior.log_sd", "must be positive"));
        }
        if self.prior.sigma_jitter <= 0.0 {
            return Err(invalid("prior.sigma_jitter", "must be positive"));
        }
        if self.tuning.slice_width <= 0.0 {
            return Err(invalid("tuning.slice_width", "must be positive"));
        }
        if !(self.tuning.corr_a > 0.0 && self.tuning.corr_a <= 1.0) {
            return Err(invalid("tuning.corr_a", "must be in (0, 1]"));
        }
        if self.tuning.corr_m < 1 {
            return Err(invalid("tuning.corr_m", "must be at least 1"));
        }
        if DatasetKind::from_name(&self.study.dataset).is_none() {
            return Err(invalid(
                "study.dataset",
                format!("unknown dataset `{}`", self.study.dataset),
            ));
        }
        if self.study.repeats < 1 {
            return Err(invalid("study.repeats", "must be at least 1"));
        }
        Ok(())
    }
}

pub fn parse_model(name: &str) -> Option<ModelKind> {
    match name {
        "STD" => Some(ModelKind::Std),
        "GPLC" => Some(ModelKind::Gplc),
        "GPLV" => Some(ModelKind::Gplv),
        _ => None,
    }
}
