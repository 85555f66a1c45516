//! MCMC kernels and per-model update schedules: univariate step-out slice
//! sampling, univariate random-walk Metropolis, and the correlated
//! whole-vector proposal for the GPLV latents.
//!
//! A sweep is one full scan over a model's coordinates. The scan order and
//! the factor-level work per coordinate follow the cost structure of the
//! models: hyperparameter changes refactor a covariance matrix, GPLC latent
//! changes rebuild one row/column before refactoring, GPLV single-latent
//! changes are rank-1 factor updates, and the correlated proposal replaces
//! the whole latent vector at the price of one refactorization.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{mul_lower, CholFactor, LinalgError};
use crate::models::{
    GplcState, GplvState, ModelKind, PriorSpec, RegressionData, StateSnapshot, StdState,
};

/// Step-out slice sampling tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceConfig {
    /// Initial slice width.
    pub width: f64,
    /// Per-update cap on interval expansions; `None` steps out indefinitely
    /// (with an internal safety cap so pathological targets terminate).
    pub max_stepouts: Option<u32>,
}

impl Default for SliceConfig {
    fn default() -> Self {
        SliceConfig {
            width: 1.0,
            max_stepouts: None,
        }
    }
}

const STEPOUT_SAFETY_CAP: u64 = 1_000_000;
const SHRINK_SAFETY_CAP: u64 = 10_000;

/// One univariate step-out slice update.
///
/// `log_f0` is the target log density at `x0` (callers already have it
/// cached) and must be finite. The returned point was accepted under the
/// auxiliary level u ~ Uniform(0, f(x0)), so the last `log_f` evaluation is
/// always at the returned point unless the update degenerates back to `x0`.
pub fn slice_update<F: FnMut(f64) -> f64>(
    x0: f64,
    log_f0: f64,
    mut log_f: F,
    cfg: &SliceConfig,
    rng: &mut impl Rng,
) -> f64 {
    assert!(log_f0.is_finite(), "slice update needs a finite starting density");
    assert!(cfg.width > 0.0, "slice width must be positive");
    let w = cfg.width;
    let level = log_f0 + rng.gen::<f64>().ln();

    let mut l = x0 - w * rng.gen::<f64>();
    let mut r = l + w;
    match cfg.max_stepouts {
        None => {
            let mut budget = STEPOUT_SAFETY_CAP;
            while budget > 0 && log_f(l) > level {
                l -= w;
                budget -= 1;
            }
            let mut budget = STEPOUT_SAFETY_CAP;
            while budget > 0 && log_f(r) > level {
                r += w;
                budget -= 1;
            }
        }
        Some(max) => {
            let mut j = (rng.gen::<f64>() * max as f64).floor() as u32;
            let mut k = max.saturating_sub(1).saturating_sub(j);
            while j > 0 && log_f(l) > level {
                l -= w;
                j -= 1;
            }
            while k > 0 && log_f(r) > level {
                r += w;
                k -= 1;
            }
        }
    }

    for _ in 0..SHRINK_SAFETY_CAP {
        let x1 = l + rng.gen::<f64>() * (r - l);
        if log_f(x1) > level {
            return x1;
        }
        if x1 < x0 {
            l = x1;
        } else {
            r = x1;
        }
        if !(r - l > 0.0) {
            break;
        }
    }
    x0
}

/// One univariate random-walk Metropolis update with a symmetric Gaussian
/// proposal. Returns the new point and whether the proposal was accepted.
pub fn metro_update<F: FnMut(f64) -> f64>(
    x0: f64,
    log_f0: f64,
    mut log_f: F,
    proposal_sd: f64,
    rng: &mut impl Rng,
) -> (f64, bool) {
    let step: f64 = StandardNormal.sample(rng);
    let prop = x0 + proposal_sd * step;
    let lf = log_f(prop);
    let accept = rng.gen::<f64>().ln() < lf - log_f0;
    if accept {
        (prop, true)
    } else {
        (x0, false)
    }
}

/// Correlated whole-vector proposal tuning: z' = (1−a²)^{1/2} z + a L u.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrPropConfig {
    pub a: f64,
    pub m: usize,
}

impl Default for CorrPropConfig {
    fn default() -> Self {
        CorrPropConfig { a: 0.3, m: 40 }
    }
}

impl CorrPropConfig {
    pub fn validate(&self) {
        assert!(
            self.a > 0.0 && self.a <= 1.0,
            "corr-prop a must be in (0, 1]"
        );
        assert!(self.m >= 1, "corr-prop m must be at least 1");
    }
}

/// One correlated whole-vector update of the latent vector.
///
/// `chol_cz` factors the prior covariance of z (C_z + σ_J² I); the proposal
/// leaves that prior invariant, so acceptance involves only the likelihood
/// ratio. Returns the (possibly unchanged) vector and the accept flag.
pub fn corr_prop_update<F: FnMut(&[f64]) -> f64>(
    z: &[f64],
    chol_cz: &CholFactor,
    cur_loglik: f64,
    mut loglik: F,
    cfg: &CorrPropConfig,
    rng: &mut impl Rng,
) -> (Vec<f64>, bool) {
    let n = z.len();
    assert_eq!(chol_cz.dim(), n, "prior factor dimension must match z");
    let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let lu = mul_lower(chol_cz, &u);
    let keep = (1.0 - cfg.a * cfg.a).max(0.0).sqrt();
    let prop: Vec<f64> = z
        .iter()
        .zip(&lu)
        .map(|(zi, lui)| keep * zi + cfg.a * lui)
        .collect();
    let lf = loglik(&prop);
    if rng.gen::<f64>().ln() < lf - cur_loglik {
        (prop, true)
    } else {
        (z.to_vec(), false)
    }
}

/// Per-coordinate Gaussian proposal SDs with Robbins–Monro adaptation
/// toward a target acceptance rate. Adaptation runs during burn-in only and
/// is frozen afterwards.
#[derive(Debug, Clone)]
pub struct MetroTuner {
    log_sd: Vec<f64>,
    steps: Vec<u64>,
    target: f64,
}

impl MetroTuner {
    pub fn new(n_coords: usize, initial_sd: f64) -> Self {
        assert!(initial_sd > 0.0);
        MetroTuner {
            log_sd: vec![initial_sd.ln(); n_coords],
            steps: vec![0; n_coords],
            target: 0.5,
        }
    }

    pub fn sd(&self, k: usize) -> f64 {
        self.log_sd[k].exp()
    }

    pub fn sds(&self) -> Vec<f64> {
        self.log_sd.iter().map(|v| v.exp()).collect()
    }

    pub fn observe(&mut self, k: usize, accepted: bool) {
        self.steps[k] += 1;
        let gamma = (self.steps[k] as f64).powf(-0.6);
        let signal = if accepted { 1.0 } else { 0.0 } - self.target;
        self.log_sd[k] += gamma * signal;
    }
}

/// Which update scheme a chain runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerKind {
    /// Slice updates everywhere (STD, GPLC); for GPLV, Metropolis
    /// hyperparameters with univariate slice updates of each latent.
    Slice,
    /// Metropolis updates everywhere (STD, GPLC); for GPLV, Metropolis
    /// hyperparameters with univariate Metropolis updates of each latent.
    Metropolis,
    /// GPLV only: Metropolis hyperparameters with m correlated whole-vector
    /// latent updates after each secondary-GP hyperparameter.
    ModifiedMetropolis,
}

impl SamplerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Slice => "slice",
            SamplerKind::Metropolis => "metropolis",
            SamplerKind::ModifiedMetropolis => "modified-metropolis",
        }
    }
}

/// Full schedule configuration for one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub sampler: SamplerKind,
    pub slice: SliceConfig,
    pub metro_initial_sd: f64,
    pub corr: CorrPropConfig,
    /// Keep every `thin`-th state snapshot.
    pub thin: usize,
    /// Adapt Metropolis proposal SDs during burn-in.
    pub tune_during_burnin: bool,
}

impl ScheduleConfig {
    /// The per-model defaults: slice sampling for STD and GPLC, the modified
    /// Metropolis scheme for GPLV.
    pub fn default_for(kind: ModelKind) -> Self {
        ScheduleConfig {
            sampler: match kind {
                ModelKind::Std | ModelKind::Gplc => SamplerKind::Slice,
                ModelKind::Gplv => SamplerKind::ModifiedMetropolis,
            },
            slice: SliceConfig::default(),
            metro_initial_sd: 0.5,
            corr: CorrPropConfig::default(),
            thin: 5,
            tune_during_burnin: true,
        }
    }
}

/// Factor-level update events per chain, split by the operation classes of
/// the models' cost table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    /// STD/GPLC hyperparameter updates (full rebuild + refactor each).
    pub hyper_updates: u64,
    /// GPLC latent updates (row/column rebuild + refactor each).
    pub latent_updates: u64,
    /// GPLV main-GP hyperparameter updates (refactor C_y).
    pub hyper_y_updates: u64,
    /// GPLV secondary-GP hyperparameter updates (refactor C_z).
    pub hyper_z_updates: u64,
    /// GPLV single-latent updates (rank-1 update of chol C_y).
    pub latent_rank1_updates: u64,
    /// GPLV whole-vector latent proposals (refactor C_y).
    pub corr_prop_updates: u64,
    /// Total target evaluations (diagnostic only).
    pub logpost_evals: u64,
}

/// Proposal/acceptance tallies for the Metropolis-style blocks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceSummary {
    pub hyper_proposed: u64,
    pub hyper_accepted: u64,
    pub latent_proposed: u64,
    pub latent_accepted: u64,
    /// Sweeps in which at least one latent proposal was accepted.
    pub sweeps_with_latent_refresh: u64,
}

impl AcceptanceSummary {
    pub fn hyper_rate(&self) -> Option<f64> {
        (self.hyper_proposed > 0).then(|| self.hyper_accepted as f64 / self.hyper_proposed as f64)
    }

    pub fn latent_rate(&self) -> Option<f64> {
        (self.latent_proposed > 0)
            .then(|| self.latent_accepted as f64 / self.latent_proposed as f64)
    }
}

/// One recorded chain: thinned state snapshots, per-iteration log posterior
/// and CPU time, named scalar traces for diagnostics, and tallies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainRecord {
    pub model: ModelKind,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub n_iter: usize,
    /// Number of initial iterations marked as burn-in (ceil(n_iter / 4));
    /// recorded, not removed.
    pub burn_in: usize,
    pub thin: usize,
    /// (iteration, snapshot) pairs, iteration 1-based, every `thin`-th sweep.
    pub snapshots: Vec<(usize, StateSnapshot)>,
    pub lpd_trace: Vec<f64>,
    pub cpu_per_iter: Vec<f64>,
    pub quantity_names: Vec<String>,
    /// One series per quantity name, each `n_iter` long.
    pub quantities: Vec<Vec<f64>>,
    pub acceptance: AcceptanceSummary,
    pub counters: OpCounters,
}

impl ChainRecord {
    pub fn post_burn_in_snapshots(&self) -> Vec<&StateSnapshot> {
        self.snapshots
            .iter()
            .filter(|(it, _)| *it > self.burn_in)
            .map(|(_, s)| s)
            .collect()
    }

    pub fn mean_cpu_per_iter(&self) -> f64 {
        self.cpu_per_iter.iter().sum::<f64>() / self.cpu_per_iter.len().max(1) as f64
    }

    pub fn quantity(&self, name: &str) -> Option<&[f64]> {
        self.quantity_names
            .iter()
            .position(|q| q == name)
            .map(|i| self.quantities[i].as_slice())
    }

    /// A quantity's post-burn-in portion.
    pub fn quantity_post_burn_in(&self, name: &str) -> Option<&[f64]> {
        self.quantity(name).map(|s| &s[self.burn_in..])
    }
}

struct SweepCtx<'a> {
    data: &'a RegressionData,
    prior: &'a PriorSpec,
    cfg: &'a ScheduleConfig,
    tuner: MetroTuner,
    tuning: bool,
    counters: OpCounters,
    acceptance: AcceptanceSummary,
}

impl<'a> SweepCtx<'a> {
    /// Generic coordinate update: slice or Metropolis over a candidate
    /// builder. `build(v)` returns the fully refreshed candidate state and
    /// its log posterior, or None when the proposal is not factorizable.
    /// Returns None when the coordinate keeps its current value.
    fn update_coord<S>(
        &mut self,
        cur_x: f64,
        cur_lp: f64,
        use_slice: bool,
        tuner_idx: usize,
        mut build: impl FnMut(f64) -> Option<(S, f64)>,
        rng: &mut ChaCha8Rng,
        is_latent: bool,
    ) -> Option<(S, f64)> {
        let mut stash: Option<(f64, S, f64)> = None;
        let evals = &mut self.counters.logpost_evals;
        let mut log_f = |v: f64| -> f64 {
            *evals += 1;
            match build(v) {
                Some((s, lp)) => {
                    stash = Some((v, s, lp));
                    lp
                }
                None => f64::NEG_INFINITY,
            }
        };
        let new_x = if use_slice {
            slice_update(cur_x, cur_lp, &mut log_f, &self.cfg.slice, rng)
        } else {
            let sd = self.tuner.sd(tuner_idx);
            let (x, accepted) = metro_update(cur_x, cur_lp, &mut log_f, sd, rng);
            if is_latent {
                self.acceptance.latent_proposed += 1;
                self.acceptance.latent_accepted += u64::from(accepted);
            } else {
                self.acceptance.hyper_proposed += 1;
                self.acceptance.hyper_accepted += u64::from(accepted);
            }
            if self.tuning {
                self.tuner.observe(tuner_idx, accepted);
            }
            x
        };
        if new_x == cur_x {
            return None;
        }
        match stash {
            Some((v, s, lp)) if v == new_x => Some((s, lp)),
            _ => None,
        }
    }
}

fn sweep_std_impl(state: StdState, ctx: &mut SweepCtx, rng: &mut ChaCha8Rng) -> StdState {
    let use_slice = ctx.cfg.sampler == SamplerKind::Slice;
    let mut cur = state;
    for k in 0..cur.n_hyper() {
        ctx.counters.hyper_updates += 1;
        let data = ctx.data;
        let prior = ctx.prior;
        let res = ctx.update_coord(
            cur.hyper(k),
            cur.log_post(),
            use_slice,
            k,
            |v| {
                cur.with_hyper(k, v, data, prior).ok().map(|s| {
                    let lp = s.log_post();
                    (s, lp)
                })
            },
            rng,
            false,
        );
        if let Some((next, _)) = res {
            cur = next;
        }
    }
    cur
}

fn sweep_gplc_impl(state: GplcState, ctx: &mut SweepCtx, rng: &mut ChaCha8Rng) -> GplcState {
    let use_slice = ctx.cfg.sampler == SamplerKind::Slice;
    let mut cur = state;
    let n_hyper = cur.n_hyper();
    for k in 0..n_hyper {
        ctx.counters.hyper_updates += 1;
        let data = ctx.data;
        let prior = ctx.prior;
        let res = ctx.update_coord(
            cur.hyper(k),
            cur.log_post(),
            use_slice,
            k,
            |v| {
                cur.with_hyper(k, v, data, prior).ok().map(|s| {
                    let lp = s.log_post();
                    (s, lp)
                })
            },
            rng,
            false,
        );
        if let Some((next, _)) = res {
            cur = next;
        }
    }
    for i in 0..cur.n_latent() {
        ctx.counters.latent_updates += 1;
        let data = ctx.data;
        let prior = ctx.prior;
        let res = ctx.update_coord(
            cur.latent(i),
            cur.log_post(),
            use_slice,
            n_hyper + i,
            |v| {
                cur.with_latent(i, v, data, prior).ok().map(|s| {
                    let lp = s.log_post();
                    (s, lp)
                })
            },
            rng,
            true,
        );
        if let Some((next, _)) = res {
            cur = next;
        }
    }
    cur
}

fn sweep_gplv_impl(state: GplvState, ctx: &mut SweepCtx, rng: &mut ChaCha8Rng) -> GplvState {
    let mut cur = state;
    let ny = cur.n_hyper_y();
    let nz = cur.n_hyper_z();

    // Main-GP hyperparameters: Metropolis in every scheme (the sampler kind
    // selects the latent update method only).
    for k in 0..ny {
        ctx.counters.hyper_y_updates += 1;
        let data = ctx.data;
        let prior = ctx.prior;
        let res = ctx.update_coord(
            cur.hyper_y(k),
            cur.log_post(),
            false,
            k,
            |v| {
                cur.with_hyper_y(k, v, data, prior).ok().map(|s| {
                    let lp = s.log_post();
                    (s, lp)
                })
            },
            rng,
            false,
        );
        if let Some((next, _)) = res {
            cur = next;
        }
    }

    let mut any_latent_accept = false;
    match ctx.cfg.sampler {
        SamplerKind::ModifiedMetropolis => {
            ctx.cfg.corr.validate();
            for k in 0..nz {
                cur = gplv_hyper_z_update(cur, ctx, k, rng);
                // Make the most of the refreshed C_z factor: m whole-vector
                // latent updates before the next secondary hyperparameter.
                for _ in 0..ctx.cfg.corr.m {
                    ctx.counters.corr_prop_updates += 1;
                    let mut stash: Option<GplvState> = None;
                    let accepted = {
                        let data = ctx.data;
                        let prior = ctx.prior;
                        let cur_ref = &cur;
                        let evals = &mut ctx.counters.logpost_evals;
                        let (_, accepted) = corr_prop_update(
                            cur_ref.latents(),
                            cur_ref.chol_z(),
                            cur_ref.main_loglik(),
                            |zprop| {
                                *evals += 1;
                                match cur_ref.with_latent_all(zprop, data, prior) {
                                    Ok(s) => {
                                        let lf = s.main_loglik();
                                        stash = Some(s);
                                        lf
                                    }
                                    Err(_) => f64::NEG_INFINITY,
                                }
                            },
                            &ctx.cfg.corr,
                            rng,
                        );
                        accepted
                    };
                    ctx.acceptance.latent_proposed += 1;
                    if accepted {
                        ctx.acceptance.latent_accepted += 1;
                        any_latent_accept = true;
                        cur = stash.expect("accepted proposal must have been built");
                    }
                }
            }
        }
        SamplerKind::Slice | SamplerKind::Metropolis => {
            for k in 0..nz {
                cur = gplv_hyper_z_update(cur, ctx, k, rng);
            }
            let use_slice = ctx.cfg.sampler == SamplerKind::Slice;
            for i in 0..cur.n_latent() {
                ctx.counters.latent_rank1_updates += 1;
                let data = ctx.data;
                let prior = ctx.prior;
                let res = ctx.update_coord(
                    cur.latent(i),
                    cur.log_post(),
                    use_slice,
                    ny + nz + i,
                    |v| {
                        cur.with_latent_rank1(i, v, data, prior).ok().map(|s| {
                            let lp = s.log_post();
                            (s, lp)
                        })
                    },
                    rng,
                    true,
                );
                if let Some((next, _)) = res {
                    any_latent_accept = true;
                    cur = next;
                }
            }
        }
    }
    if any_latent_accept {
        ctx.acceptance.sweeps_with_latent_refresh += 1;
    }
    cur
}

fn gplv_hyper_z_update(
    cur: GplvState,
    ctx: &mut SweepCtx,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> GplvState {
    ctx.counters.hyper_z_updates += 1;
    let ny = cur.n_hyper_y();
    let data = ctx.data;
    let prior = ctx.prior;
    let res = ctx.update_coord(
        cur.hyper_z(k),
        cur.log_post(),
        false,
        ny + k,
        |v| {
            cur.with_hyper_z(k, v, data, prior).ok().map(|s| {
                let lp = s.log_post();
                (s, lp)
            })
        },
        rng,
        false,
    );
    match res {
        Some((next, _)) => next,
        None => cur,
    }
}

enum ChainState {
    Std(StdState),
    Gplc(GplcState),
    Gplv(GplvState),
}

impl ChainState {
    fn log_post(&self) -> f64 {
        match self {
            ChainState::Std(s) => s.log_post(),
            ChainState::Gplc(s) => s.log_post(),
            ChainState::Gplv(s) => s.log_post(),
        }
    }

    fn snapshot(&self) -> StateSnapshot {
        match self {
            ChainState::Std(s) => s.snapshot(),
            ChainState::Gplc(s) => s.snapshot(),
            ChainState::Gplv(s) => s.snapshot(),
        }
    }
}

/// Quantity names for a model's diagnostic traces: each hyperparameter on
/// its natural scale, plus the latent sum and sum of squares when present.
pub fn quantity_names(kind: ModelKind, p: usize) -> Vec<String> {
    let mut names = Vec::new();
    match kind {
        ModelKind::Std => {
            names.push("eta".into());
            for k in 1..=p {
                names.push(format!("rho{k}"));
            }
            names.push("sigma".into());
        }
        ModelKind::Gplc => {
            names.push("eta".into());
            for k in 1..=p + 1 {
                names.push(format!("rho{k}"));
            }
            names.push("sigma".into());
            names.push("sum_w".into());
            names.push("sum_w2".into());
        }
        ModelKind::Gplv => {
            names.push("eta_y".into());
            for k in 1..=p {
                names.push(format!("rho_y{k}"));
            }
            names.push("eta_z".into());
            for k in 1..=p {
                names.push(format!("rho_z{k}"));
            }
            names.push("sum_z".into());
            names.push("sum_z2".into());
        }
    }
    names
}

fn quantity_values(state: &ChainState) -> Vec<f64> {
    match state {
        ChainState::Std(s) => s.hypers().iter().map(|v| v.exp()).collect(),
        ChainState::Gplc(s) => {
            let mut q: Vec<f64> = s.hypers().iter().map(|v| v.exp()).collect();
            q.push(s.latents().iter().sum());
            q.push(s.latents().iter().map(|w| w * w).sum());
            q
        }
        ChainState::Gplv(s) => {
            let mut q: Vec<f64> = s.hypers_y().iter().map(|v| v.exp()).collect();
            q.extend(s.hypers_z().iter().map(|v| v.exp()));
            q.push(s.latents().iter().sum());
            q.push(s.latents().iter().map(|z| z * z).sum());
            q
        }
    }
}

/// Run one chain from the prior-mean start. Deterministic given the seed;
/// the burn-in fraction (first quarter, rounded up) is recorded but not
/// removed. Per-iteration CPU time covers the sweep only.
pub fn run_chain(
    kind: ModelKind,
    data: &RegressionData,
    prior: &PriorSpec,
    n_iter: usize,
    seed: u64,
    cfg: &ScheduleConfig,
) -> Result<ChainRecord, LinalgError> {
    assert!(n_iter >= 4, "need at least 4 iterations");
    assert!(cfg.thin >= 1, "thinning factor must be at least 1");
    if cfg.sampler == SamplerKind::ModifiedMetropolis {
        assert_eq!(
            kind,
            ModelKind::Gplv,
            "the modified Metropolis scheme applies to GPLV only"
        );
    }
    let burn_in = n_iter.div_ceil(4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let p = data.p();
    let n_tuner_coords = match kind {
        ModelKind::Std => p + 2 + data.n(),
        ModelKind::Gplc => p + 3 + data.n(),
        ModelKind::Gplv => 2 * p + 2 + data.n(),
    };
    let mut ctx = SweepCtx {
        data,
        prior,
        cfg,
        tuner: MetroTuner::new(n_tuner_coords, cfg.metro_initial_sd),
        tuning: cfg.tune_during_burnin,
        counters: OpCounters::default(),
        acceptance: AcceptanceSummary::default(),
    };

    let mut state = match kind {
        ModelKind::Std => ChainState::Std(StdState::prior_mean(data, prior)?),
        ModelKind::Gplc => ChainState::Gplc(GplcState::prior_mean(data, prior)?),
        ModelKind::Gplv => ChainState::Gplv(GplvState::prior_mean(data, prior)?),
    };

    let names = quantity_names(kind, p);
    let mut quantities: Vec<Vec<f64>> = vec![Vec::with_capacity(n_iter); names.len()];
    let mut lpd_trace = Vec::with_capacity(n_iter);
    let mut cpu_per_iter = Vec::with_capacity(n_iter);
    let mut snapshots = Vec::new();

    for iter in 1..=n_iter {
        ctx.tuning = cfg.tune_during_burnin && iter <= burn_in;
        let t0 = Instant::now();
        state = match state {
            ChainState::Std(s) => ChainState::Std(sweep_std_impl(s, &mut ctx, &mut rng)),
            ChainState::Gplc(s) => ChainState::Gplc(sweep_gplc_impl(s, &mut ctx, &mut rng)),
            ChainState::Gplv(s) => ChainState::Gplv(sweep_gplv_impl(s, &mut ctx, &mut rng)),
        };
        cpu_per_iter.push(t0.elapsed().as_secs_f64());
        lpd_trace.push(state.log_post());
        for (series, v) in quantities.iter_mut().zip(quantity_values(&state)) {
            series.push(v);
        }
        if iter % cfg.thin == 0 {
            snapshots.push((iter, state.snapshot()));
        }
    }

    Ok(ChainRecord {
        model: kind,
        sampler: cfg.sampler,
        seed,
        n_iter,
        burn_in,
        thin: cfg.thin,
        snapshots,
        lpd_trace,
        cpu_per_iter,
        quantity_names: names,
        quantities,
        acceptance: ctx.acceptance,
        counters: ctx.counters,
    })
}

/// One sweep of the standard model (public entry point used by tests and
/// by callers that manage their own chain loop).
pub fn sweep_std(
    state: StdState,
    data: &RegressionData,
    prior: &PriorSpec,
    cfg: &ScheduleConfig,
    rng: &mut ChaCha8Rng,
    counters: &mut OpCounters,
) -> StdState {
    let mut ctx = SweepCtx {
        data,
        prior,
        cfg,
        tuner: MetroTuner::new(state.n_hyper(), cfg.metro_initial_sd),
        tuning: false,
        counters: std::mem::take(counters),
        acceptance: AcceptanceSummary::default(),
    };
    let out = sweep_std_impl(state, &mut ctx, rng);
    *counters = ctx.counters;
    out
}

/// One sweep of the latent-covariate model.
pub fn sweep_gplc(
    state: GplcState,
    data: &RegressionData,
    prior: &PriorSpec,
    cfg: &ScheduleConfig,
    rng: &mut ChaCha8Rng,
    counters: &mut OpCounters,
) -> GplcState {
    let n = state.n_hyper() + state.n_latent();
    let mut ctx = SweepCtx {
        data,
        prior,
        cfg,
        tuner: MetroTuner::new(n, cfg.metro_initial_sd),
        tuning: false,
        counters: std::mem::take(counters),
        acceptance: AcceptanceSummary::default(),
    };
    let out = sweep_gplc_impl(state, &mut ctx, rng);
    *counters = ctx.counters;
    out
}

/// One sweep of the latent-variance model under any of its three schemes.
pub fn sweep_gplv(
    state: GplvState,
    data: &RegressionData,
    prior: &PriorSpec,
    cfg: &ScheduleConfig,
    rng: &mut ChaCha8Rng,
    counters: &mut OpCounters,
) -> GplvState {
    let n = state.n_hyper_y() + state.n_hyper_z() + state.n_latent();
    let mut ctx = SweepCtx {
        data,
        prior,
        cfg,
        tuner: MetroTuner::new(n, cfg.metro_initial_sd),
        tuning: false,
        counters: std::mem::take(counters),
        acceptance: AcceptanceSummary::default(),
    };
    let out = sweep_gplv_impl(state, &mut ctx, rng);
    *counters = ctx.counters;
    out
}
