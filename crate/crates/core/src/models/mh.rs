//! Heterogeneous detection: `logit p_i ~ N(mu, sigma2)` across individuals.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::data::CaptureHistory;
use crate::dist::special::{log1mexp, log_mean_exp, logistic, logit, miss_prob, softplus};
use crate::dist::{
    inv_gamma_logpdf, normal_logpdf, pois_logpmf_unchecked, PoissonBinomialDp, StreamRng, Variates,
};
use crate::engine::{run_pprb, Chain, FitConfig, NModelKind, NModelSpec, PprbFit, RwBlock, Stage1Target};
use crate::error::{Error, Result};

pub const MODEL_ID: &str = "mh";

/// Lower bound applied to Gibbs draws of `sigma2`.
pub const SIGMA2_FLOOR: f64 = 1e-8;

pub const DEFAULT_MC_POISSON: usize = 500;
pub const DEFAULT_MC_POISBINOM: usize = 100;

/// Columns before the per-individual `logit_p_i` block.
const HEAD: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct MhParams {
    pub logit_p: Vec<f64>,
    pub mu: f64,
    pub sigma2: f64,
    pub psi: f64,
}

impl MhParams {
    pub fn from_row(row: &[f64]) -> Self {
        Self { mu: row[0], sigma2: row[1], psi: row[2], logit_p: row[HEAD..].to_vec() }
    }
}

/// Hyperparameters: `mu ~ N(mu_mean, mu_var)`, `sigma2 ~ IG(shape, rate)`, `psi ~ Beta(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MhPriors {
    pub mu_mean: f64,
    pub mu_var: f64,
    pub sigma2_shape: f64,
    pub sigma2_rate: f64,
    pub a_psi: f64,
    pub b_psi: f64,
}

impl Default for MhPriors {
    fn default() -> Self {
        Self { mu_mean: -1.0, mu_var: 1.0, sigma2_shape: 0.01, sigma2_rate: 0.01, a_psi: 1.0, b_psi: 1.0 }
    }
}

impl MhPriors {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.mu_var, self.sigma2_shape, self.sigma2_rate, self.a_psi, self.b_psi];
        if positive.iter().all(|v| *v > 0.0) && self.mu_mean.is_finite() {
            Ok(())
        } else {
            Err(Error::config("Mh prior variances and shapes must be positive"))
        }
    }
}

/// Zero-truncated binomial log-likelihood of `y` detections as a function of `logit p`.
#[inline]
fn zt_loglik(y: u32, j: u32, eta: f64) -> f64 {
    y as f64 * eta - j as f64 * softplus(eta) - log1mexp(j as f64 * softplus(eta))
}

/// Stage-1 log-target: truncated likelihood, random-effect density and priors on `mu`, `sigma2`.
pub fn mh_stage1_logtarget(params: &MhParams, data: &CaptureHistory, priors: &MhPriors) -> f64 {
    if !(params.sigma2 > 0.0) || params.logit_p.len() != data.n() {
        return f64::NEG_INFINITY;
    }
    let j = data.occasions();
    let per: f64 = data
        .counts()
        .iter()
        .zip(&params.logit_p)
        .map(|(&y, &eta)| {
            ln_binomial(j as u64, y as u64) + zt_loglik(y, j, eta) + normal_logpdf(eta, params.mu, params.sigma2)
        })
        .sum();
    per + normal_logpdf(params.mu, priors.mu_mean, priors.mu_var)
        + inv_gamma_logpdf(params.sigma2, priors.sigma2_shape, priors.sigma2_rate)
}

/// Monte Carlo estimate of `log [n | params]`, integrating over the random
/// effects of the `M - n` unobserved individuals.
pub fn mh_n_logpmf_mc(
    params: &MhParams,
    n: u64,
    spec: NModelSpec,
    j: u32,
    mc_draws: usize,
    rng: &mut StreamRng,
) -> Result<f64> {
    let m = spec.superpop as u64;
    if n > m {
        return Ok(f64::NEG_INFINITY);
    }
    let augmented = (m - n) as usize;
    let psi = params.psi;
    let sd = params.sigma2.sqrt();
    let mut logs = Vec::with_capacity(mc_draws);
    match spec.kind {
        NModelKind::Poisson => {
            let observed: f64 = params.logit_p.iter().map(|&eta| 1.0 - miss_prob(eta, j)).sum();
            let mut z = vec![0.0; augmented];
            for _ in 0..mc_draws {
                // Drawing the normals first keeps the hot loop free of RNG state.
                z.iter_mut().for_each(|v| *v = rng.std_normal());
                let missed: f64 = z.iter().map(|&v| miss_prob(params.mu + sd * v, j)).sum();
                let lambda = psi * (observed + augmented as f64 - missed);
                logs.push(pois_logpmf_unchecked(n, lambda));
            }
        }
        NModelKind::PoissonBinomial => {
            let mut prefix = PoissonBinomialDp::new(n as usize);
            for &eta in &params.logit_p {
                prefix.push(psi * (1.0 - miss_prob(eta, j)));
            }
            let mut dp = prefix.clone();
            for _ in 0..mc_draws {
                dp.clone_from(&prefix);
                for _ in 0..augmented {
                    dp.push(psi * (1.0 - miss_prob(params.mu + sd * rng.std_normal(), j)));
                }
                logs.push(dp.log_pmf(n as usize));
            }
        }
        NModelKind::Binomial => {
            return Err(Error::config("Mh supports the poisbinom and poisson n-models"));
        }
    }
    Ok(log_mean_exp(&logs))
}

/// Monte Carlo estimate of the membership probability of an undetected individual.
pub fn mh_psibar_mc(params: &MhParams, j: u32, mc_draws: usize, rng: &mut StreamRng) -> f64 {
    psibar_mc(params.mu, params.sigma2, params.psi, j, mc_draws, rng)
}

fn psibar_mc(mu: f64, sigma2: f64, psi: f64, j: u32, mc_draws: usize, rng: &mut StreamRng) -> f64 {
    if psi >= 1.0 {
        return 1.0;
    }
    let sd = sigma2.sqrt();
    let total: f64 = (0..mc_draws)
        .map(|_| {
            let stay = psi * miss_prob(mu + sd * rng.std_normal(), j);
            stay / (stay + 1.0 - psi)
        })
        .sum();
    total / mc_draws as f64
}

/// Draws the number of undetected members: Poisson under the Poisson
/// n-model, binomial otherwise.
pub fn mh_stage3_sample(
    params: &MhParams,
    n: u64,
    spec: NModelSpec,
    j: u32,
    mc_draws: usize,
    rng: &mut StreamRng,
) -> u64 {
    stage3(params.mu, params.sigma2, params.psi, n, spec, j, mc_draws, rng)
}

#[allow(clippy::too_many_arguments)]
fn stage3(mu: f64, sigma2: f64, psi: f64, n: u64, spec: NModelSpec, j: u32, mc: usize, rng: &mut StreamRng) -> u64 {
    let remaining = (spec.superpop as u64).saturating_sub(n);
    let psibar = psibar_mc(mu, sigma2, psi, j, mc, rng);
    match spec.kind {
        NModelKind::Poisson => rng.poisson(psibar * remaining as f64),
        _ => rng.binomial(remaining, psibar),
    }
}

/// Posterior predictive probability that a member is detected at least once,
/// by composition sampling over the retained draws.
pub fn mh_power_to_detect(chain: &Chain, j: u32, rng: &mut StreamRng) -> Result<f64> {
    let mu = chain.require("mu")?;
    let sigma2 = chain.require("sigma2")?;
    let hits = mu
        .iter()
        .zip(sigma2)
        .filter(|(&m, &s)| {
            let p = logistic(m + s.sqrt() * rng.std_normal());
            rng.binomial(j as u64, p) > 0
        })
        .count();
    Ok(hits as f64 / mu.len() as f64)
}

#[derive(Debug, Clone)]
pub struct MhState {
    pub logit_p: Vec<f64>,
    pub mu: f64,
    pub sigma2: f64,
    pub psi: f64,
}

/// Stage-1 sampler: per-individual random walks on `logit p_i`, a joint
/// shift of all `logit p_i` with `mu`, Gibbs draws of `mu` and `sigma2`, and
/// a prior draw of `psi`.
#[derive(Debug)]
pub struct MhModel {
    data: CaptureHistory,
    priors: MhPriors,
    fixed_sigma2: Option<f64>,
    floor_hits: AtomicU64,
}

impl MhModel {
    pub fn new(data: CaptureHistory, priors: MhPriors) -> Result<Self> {
        priors.validate()?;
        Ok(Self { data, priors, fixed_sigma2: None, floor_hits: AtomicU64::new(0) })
    }

    /// Holds `sigma2` at a constant instead of sampling it.
    pub fn with_fixed_sigma2(mut self, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::config("fixed sigma2 must be positive"));
        }
        self.fixed_sigma2 = Some(sigma2);
        Ok(self)
    }

    /// Number of Gibbs draws of `sigma2` raised to [`SIGMA2_FLOOR`].
    pub fn floor_hits(&self) -> u64 {
        self.floor_hits.load(Ordering::Relaxed)
    }

    fn sweep_individuals(&self, s: &mut MhState, block: &mut RwBlock, rng: &mut StreamRng) {
        let j = self.data.occasions();
        let scale = block.scale();
        for (eta, &y) in s.logit_p.iter_mut().zip(self.data.counts()) {
            let prop = *eta + scale * rng.std_normal();
            let ratio = zt_loglik(y, j, prop) - zt_loglik(y, j, *eta)
                + ((*eta - s.mu).powi(2) - (prop - s.mu).powi(2)) / (2.0 * s.sigma2);
            if block.accept(ratio, rng) {
                *eta = prop;
            }
        }
    }

    /// Translates every `logit p_i` and `mu` together; leaves the
    /// random-effect density unchanged.
    fn sweep_shift(&self, s: &mut MhState, block: &mut RwBlock, rng: &mut StreamRng) {
        let j = self.data.occasions();
        let delta = block.scale() * rng.std_normal();
        let lik: f64 = s
            .logit_p
            .iter()
            .zip(self.data.counts())
            .map(|(&eta, &y)| zt_loglik(y, j, eta + delta) - zt_loglik(y, j, eta))
            .sum();
        let pr = &self.priors;
        let prior = normal_logpdf(s.mu + delta, pr.mu_mean, pr.mu_var) - normal_logpdf(s.mu, pr.mu_mean, pr.mu_var);
        if block.accept(lik + prior, rng) {
            s.logit_p.iter_mut().for_each(|eta| *eta += delta);
            s.mu += delta;
        }
    }

    fn gibbs_mu(&self, s: &mut MhState, rng: &mut StreamRng) {
        let pr = &self.priors;
        let n = s.logit_p.len() as f64;
        let sum: f64 = s.logit_p.iter().sum();
        let precision = n / s.sigma2 + 1.0 / pr.mu_var;
        let mean = (sum / s.sigma2 + pr.mu_mean / pr.mu_var) / precision;
        s.mu = rng.normal(mean, precision.recip().sqrt());
    }

    fn gibbs_sigma2(&self, s: &mut MhState, rng: &mut StreamRng) {
        if let Some(v) = self.fixed_sigma2 {
            s.sigma2 = v;
            return;
        }
        let draw = sigma2_conditional(&s.logit_p, s.mu, &self.priors, rng);
        if draw < SIGMA2_FLOOR {
            self.floor_hits.fetch_add(1, Ordering::Relaxed);
        }
        s.sigma2 = draw.max(SIGMA2_FLOOR);
    }
}

/// Draw from the inverse-gamma full conditional of `sigma2`.
pub(crate) fn sigma2_conditional(logit_p: &[f64], mu: f64, priors: &MhPriors, rng: &mut StreamRng) -> f64 {
    let ss: f64 = logit_p.iter().map(|eta| (eta - mu).powi(2)).sum();
    rng.inv_gamma(priors.sigma2_shape + logit_p.len() as f64 / 2.0, priors.sigma2_rate + ss / 2.0)
}

impl Stage1Target for MhModel {
    type State = MhState;

    fn model_id(&self) -> &str {
        MODEL_ID
    }

    fn column_names(&self) -> Vec<String> {
        let mut names = vec!["mu".to_string(), "sigma2".to_string(), "psi".to_string()];
        names.extend((1..=self.data.n()).map(|i| format!("logit_p_{i}")));
        names
    }

    fn initial_state(&self) -> Result<MhState> {
        if self.data.n() == 0 {
            return Err(Error::data("no observed individuals"));
        }
        let j = self.data.occasions() as f64;
        let floor = 1.0 / (2.0 * j);
        let logit_p = self
            .data
            .counts()
            .iter()
            .map(|&y| logit((y as f64 / j).clamp(floor, 1.0 - floor)))
            .collect();
        Ok(MhState {
            logit_p,
            mu: self.priors.mu_mean,
            sigma2: self.fixed_sigma2.unwrap_or(1.0),
            psi: 0.5,
        })
    }

    fn log_target(&self, s: &MhState) -> f64 {
        let params = MhParams { logit_p: s.logit_p.clone(), mu: s.mu, sigma2: s.sigma2, psi: s.psi };
        mh_stage1_logtarget(&params, &self.data, &self.priors)
    }

    fn proposal_blocks(&self, config: &FitConfig) -> Vec<RwBlock> {
        vec![
            RwBlock::scalar("logit_p", config.scale_or("logit_p", 1.0)),
            RwBlock::scalar("shift", config.scale_or("shift", 0.3)),
        ]
    }

    fn sweep(&self, s: &mut MhState, blocks: &mut [RwBlock], rng: &mut StreamRng) {
        let (ind, shift) = blocks.split_at_mut(1);
        self.sweep_individuals(s, &mut ind[0], rng);
        self.sweep_shift(s, &mut shift[0], rng);
        self.gibbs_mu(s, rng);
        self.gibbs_sigma2(s, rng);
        s.psi = rng.beta(self.priors.a_psi, self.priors.b_psi);
    }

    fn record(&self, s: &MhState, out: &mut Vec<f64>) {
        out.extend([s.mu, s.sigma2, s.psi]);
        out.extend_from_slice(&s.logit_p);
    }
}

/// Default Monte Carlo size for the n-pmf under each n-model.
pub fn default_mc_draws(kind: NModelKind) -> usize {
    match kind {
        NModelKind::Poisson => DEFAULT_MC_POISSON,
        _ => DEFAULT_MC_POISBINOM,
    }
}

/// Three-stage fit of the heterogeneous model.
pub fn fit_mh(data: &CaptureHistory, priors: &MhPriors, config: &FitConfig) -> Result<PprbFit> {
    fit_mh_with(MhModel::new(data.clone(), *priors)?, config)
}

pub fn fit_mh_with(model: MhModel, config: &FitConfig) -> Result<PprbFit> {
    let spec = config.n_model;
    if spec.kind == NModelKind::Binomial {
        return Err(Error::config("Mh supports the poisbinom and poisson n-models"));
    }
    let n = model.data.n() as u64;
    let j = model.data.occasions();
    let mc_n = config.mc_draws_or(default_mc_draws(spec.kind));
    let mc_psibar = config.mc_draws_psibar;
    run_pprb(
        &model,
        |row: &[f64], rng: &mut StreamRng| {
            mh_n_logpmf_mc(&MhParams::from_row(row), n, spec, j, mc_n, rng)
        },
        |row: &[f64], rng: &mut StreamRng| stage3(row[0], row[1], row[2], n, spec, j, mc_psibar, rng),
        n,
        config,
    )
}
