//! Homogeneous detection: every individual shares one detection probability.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::data::CaptureHistory;
use crate::dist::special::{logistic, logit};
use crate::dist::{
    beta_logpdf, binom_logpmf_unchecked, log_detect_prob, pois_logpmf_unchecked, rng_stream, tag,
    StreamRng, Variates,
};
use crate::engine::{
    acceptance_by_group, run_pprb, Chain, ChainMeta, FitConfig, NModelKind, NModelSpec, PprbFit,
    RwBlock, Stage1Target, TARGET_BIVARIATE, ADAPT_INTERVAL,
};
use crate::error::{Error, Result};

pub const MODEL_ID: &str = "m0";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M0Params {
    pub p: f64,
    pub psi: f64,
}

impl M0Params {
    /// Reads `(p, psi)` from a chain row laid out as [`M0Model::column_names`].
    pub fn from_row(row: &[f64]) -> Self {
        Self { p: row[0], psi: row[1] }
    }
}

/// Beta priors on `p` and `psi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct M0Priors {
    pub a_p: f64,
    pub b_p: f64,
    pub a_psi: f64,
    pub b_psi: f64,
}

impl Default for M0Priors {
    fn default() -> Self {
        Self { a_p: 1.0, b_p: 1.0, a_psi: 1.0, b_psi: 1.0 }
    }
}

impl M0Priors {
    pub fn validate(&self) -> Result<()> {
        let all = [self.a_p, self.b_p, self.a_psi, self.b_psi];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::config("Beta hyperparameters must be positive"))
        }
    }
}

/// Sufficient statistics of the zero-truncated likelihood.
#[derive(Debug, Clone, Copy)]
struct Suff {
    n: f64,
    total: f64,
    trials: u64,
    log_coef: f64,
}

impl Suff {
    fn new(data: &CaptureHistory) -> Self {
        let trials = data.occasions() as u64;
        Self {
            n: data.n() as f64,
            total: data.total_detections() as f64,
            trials,
            log_coef: data.counts().iter().map(|&y| ln_binomial(trials, y as u64)).sum(),
        }
    }

    fn loglik(&self, p: f64) -> f64 {
        if !(p > 0.0 && p <= 1.0) {
            return f64::NEG_INFINITY;
        }
        let misses = self.n * self.trials as f64 - self.total;
        if p == 1.0 {
            return if misses == 0.0 { self.log_coef } else { f64::NEG_INFINITY };
        }
        self.log_coef + self.total * p.ln() + misses * (-p).ln_1p()
            - self.n * log_detect_prob(self.trials, p)
    }
}

/// Stage-1 log-target: zero-truncated binomial likelihood plus the prior on `p`.
///
/// `psi` does not enter; it is drawn from its prior during stage 1.
pub fn m0_stage1_logtarget(params: M0Params, data: &CaptureHistory, priors: &M0Priors) -> f64 {
    Suff::new(data).loglik(params.p) + beta_logpdf(params.p, priors.a_p, priors.b_p)
}

/// Probability that a member is detected at least once in `j` occasions.
fn detect_prob(p: f64, j: u32) -> f64 {
    1.0 - (1.0 - p).powi(j as i32)
}

/// Conditional log-pmf of the number of observed individuals.
pub fn m0_n_logpmf(params: M0Params, n: u64, spec: NModelSpec, j: u32) -> f64 {
    let pi = params.psi * detect_prob(params.p, j);
    let m = spec.superpop as u64;
    match spec.kind {
        NModelKind::Binomial | NModelKind::PoissonBinomial => {
            if n > m {
                f64::NEG_INFINITY
            } else {
                binom_logpmf_unchecked(n, m, pi.clamp(0.0, 1.0))
            }
        }
        NModelKind::Poisson => pois_logpmf_unchecked(n, pi * m as f64),
    }
}

/// Membership probability of an individual never detected.
pub fn m0_psibar(params: M0Params, j: u32) -> f64 {
    let stay = params.psi * (1.0 - params.p).powi(j as i32);
    let denom = stay + 1.0 - params.psi;
    if denom > 0.0 { stay / denom } else { 1.0 }
}

/// Draws the number of undetected members from its full conditional.
pub fn m0_stage3_sample(params: M0Params, n: u64, spec: NModelSpec, j: u32, rng: &mut StreamRng) -> u64 {
    let remaining = (spec.superpop as u64).saturating_sub(n);
    let psibar = m0_psibar(params, j);
    match spec.kind {
        NModelKind::Poisson => rng.poisson(psibar * remaining as f64),
        _ => rng.binomial(remaining, psibar),
    }
}

/// Posterior mean of `1 - (1 - p)^J`.
pub fn m0_power_to_detect(chain: &Chain, j: u32) -> Result<f64> {
    let p = chain.require("p")?;
    Ok(p.iter().map(|&p| detect_prob(p, j)).sum::<f64>() / p.len() as f64)
}

/// Stage-1 sampler: random walk on `logit p`, prior draw for `psi`.
#[derive(Debug, Clone)]
pub struct M0Model {
    suff: Suff,
    data: CaptureHistory,
    priors: M0Priors,
}

impl M0Model {
    pub fn new(data: CaptureHistory, priors: M0Priors) -> Result<Self> {
        priors.validate()?;
        Ok(Self { suff: Suff::new(&data), data, priors })
    }

    pub fn data(&self) -> &CaptureHistory {
        &self.data
    }

    /// Log-target on the logit scale, including the Jacobian `p (1 - p)`.
    fn logit_target(&self, eta: f64) -> f64 {
        let p = logistic(eta);
        self.suff.loglik(p) + beta_logpdf(p, self.priors.a_p, self.priors.b_p) + p.ln() + (-p).ln_1p()
    }

    fn initial_p(&self) -> f64 {
        let mean = self.suff.total / self.suff.n;
        (mean / self.suff.trials.max(1) as f64).clamp(0.01, 0.99)
    }
}

impl Stage1Target for M0Model {
    /// `(logit p, psi)`
    type State = (f64, f64);

    fn model_id(&self) -> &str {
        MODEL_ID
    }

    fn column_names(&self) -> Vec<String> {
        vec!["p".into(), "psi".into()]
    }

    fn initial_state(&self) -> Result<(f64, f64)> {
        if self.data.n() == 0 {
            return Err(Error::data("no observed individuals"));
        }
        Ok((logit(self.initial_p()), 0.5))
    }

    fn log_target(&self, state: &(f64, f64)) -> f64 {
        self.logit_target(state.0)
    }

    fn proposal_blocks(&self, config: &FitConfig) -> Vec<RwBlock> {
        vec![RwBlock::scalar("p", config.scale_or("p", 0.5))]
    }

    fn sweep(&self, state: &mut (f64, f64), blocks: &mut [RwBlock], rng: &mut StreamRng) {
        let prop = state.0 + blocks[0].scale() * rng.std_normal();
        if blocks[0].accept(self.logit_target(prop) - self.logit_target(state.0), rng) {
            state.0 = prop;
        }
        state.1 = rng.beta(self.priors.a_psi, self.priors.b_psi);
    }

    fn record(&self, state: &(f64, f64), out: &mut Vec<f64>) {
        out.push(logistic(state.0));
        out.push(state.1);
    }
}

/// Three-stage fit of the homogeneous model.
pub fn fit_m0(data: &CaptureHistory, priors: &M0Priors, config: &FitConfig) -> Result<PprbFit> {
    let model = M0Model::new(data.clone(), *priors)?;
    let n = data.n() as u64;
    let j = data.occasions();
    let spec = config.n_model;
    run_pprb(
        &model,
        |row: &[f64], _: &mut StreamRng| Ok(m0_n_logpmf(M0Params::from_row(row), n, spec, j)),
        |row: &[f64], rng: &mut StreamRng| m0_stage3_sample(M0Params::from_row(row), n, spec, j, rng),
        n,
        config,
    )
}

/// Conventional single-stage sampler on the full model, for checking the
/// staged fit. Joint random walk on `(logit p, logit psi)` plus an exact
/// draw of the undetected members each iteration.
pub fn m0_single_stage_fit(
    data: &CaptureHistory,
    priors: &M0Priors,
    spec: NModelSpec,
    config: &FitConfig,
) -> Result<Chain> {
    single_stage(data, priors, spec, config, None)
}

pub(crate) fn single_stage(
    data: &CaptureHistory,
    priors: &M0Priors,
    spec: NModelSpec,
    config: &FitConfig,
    fixed_p: Option<f64>,
) -> Result<Chain> {
    config.validate()?;
    priors.validate()?;
    if spec.kind != NModelKind::Binomial {
        return Err(Error::config("the single-stage sampler supports the binomial n-model only"));
    }
    spec.check_against(data.n())?;
    let model = M0Model::new(data.clone(), *priors)?;
    let n = data.n() as u64;
    let j = data.occasions();

    let target = |eta_p: f64, eta_psi: f64| -> f64 {
        let psi = logistic(eta_psi);
        let p = fixed_p.unwrap_or_else(|| logistic(eta_p));
        let p_part = if fixed_p.is_some() { model.suff.loglik(p) } else { model.logit_target(eta_p) };
        p_part
            + m0_n_logpmf(M0Params { p, psi }, n, spec, j)
            + beta_logpdf(psi, priors.a_psi, priors.b_psi)
            + psi.ln()
            + (-psi).ln_1p()
    };

    let mut state = (logit(fixed_p.unwrap_or_else(|| model.initial_p())), 0.0);
    let mut current = target(state.0, state.1);
    if !current.is_finite() {
        return Err(Error::Init(format!("single-stage log-target at the initial state is {current}")));
    }
    let mut rng = rng_stream(config.seed, tag::ORACLE);
    let mut block = [RwBlock::new("p_psi", config.scale_or("p_psi", 0.5), TARGET_BIVARIATE)];
    let burn = config.burn_in_iters();
    let names = vec!["p".into(), "psi".into(), "N0".into(), "N".into()];
    let mut chain = Chain::with_capacity(names, ChainMeta::new(MODEL_ID, "single_stage", config.seed), config.k1);
    for it in 0..burn + config.k1 {
        let scale = block[0].scale();
        let prop = (
            if fixed_p.is_some() { state.0 } else { state.0 + scale * rng.std_normal() },
            state.1 + scale * rng.std_normal(),
        );
        let cand = target(prop.0, prop.1);
        if block[0].accept(cand - current, &mut rng) {
            state = prop;
            current = cand;
        }
        let params = M0Params { p: fixed_p.unwrap_or_else(|| logistic(state.0)), psi: logistic(state.1) };
        let n0 = m0_stage3_sample(params, n, spec, j, &mut rng);
        if it < burn {
            if config.adapt && (it + 1) % ADAPT_INTERVAL == 0 {
                block[0].adapt();
            }
            if it + 1 == burn {
                block[0].reset();
            }
            continue;
        }
        chain.push_row(&[params.p, params.psi, n0 as f64, (n + n0) as f64]);
    }
    chain.meta_mut().acceptance = acceptance_by_group(&block);
    Ok(chain)
}
