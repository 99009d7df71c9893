//! Spatial capture-recapture: detection decays with squared distance between
//! an individual's activity center and each trap.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::data::{sq_dist, Point, Region, ScrData};
use crate::dist::special::{log1mexp, log_mean_exp, logistic, logit, softplus};
use crate::dist::{normal_logpdf, pois_logpmf_unchecked, PoissonBinomialDp, StreamRng, Variates};
use crate::engine::summary::quantile_sorted;
use crate::engine::{
    run_pprb, Chain, FitConfig, NModelKind, NModelSpec, PprbFit, RwBlock, Stage1Target, TARGET_BIVARIATE,
};
use crate::error::{Error, Result};

pub const MODEL_ID: &str = "scr";

pub const DEFAULT_MC_POISSON: usize = 500;
pub const DEFAULT_MC_POISBINOM: usize = 100;
pub const DEFAULT_SUPERPOP: usize = 50;

/// Base random-walk steps for `(beta0, beta1)`, multiplied by the adaptive scale.
const BETA_STEP: [f64; 2] = [0.3, 2e-5];

const HEAD: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ScrParams {
    pub centers: Vec<Point>,
    pub beta0: f64,
    pub beta1: f64,
    pub psi: f64,
}

impl ScrParams {
    pub fn from_row(row: &[f64]) -> Self {
        Self {
            beta0: row[0],
            beta1: row[1],
            psi: row[2],
            centers: row[HEAD..].chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
        }
    }
}

/// `beta ~ N(beta_mean, beta_var I)`, `psi ~ Beta(a_psi, b_psi)`; centers uniform on the region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScrPriors {
    pub beta_mean: [f64; 2],
    pub beta_var: f64,
    pub a_psi: f64,
    pub b_psi: f64,
}

impl Default for ScrPriors {
    fn default() -> Self {
        Self { beta_mean: [0.0, 0.0], beta_var: 1000.0, a_psi: 1.0, b_psi: 1.0 }
    }
}

impl ScrPriors {
    pub fn validate(&self) -> Result<()> {
        if self.beta_var > 0.0 && self.a_psi > 0.0 && self.b_psi > 0.0 {
            Ok(())
        } else {
            Err(Error::config("SCR prior variance and Beta parameters must be positive"))
        }
    }

    fn beta_logpdf(&self, b: [f64; 2]) -> f64 {
        normal_logpdf(b[0], self.beta_mean[0], self.beta_var) + normal_logpdf(b[1], self.beta_mean[1], self.beta_var)
    }
}

/// How an individual's chance of appearing in the sample enters the
/// n-model: the Poisson intensity, or the Poisson-binomial trial probabilities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScrIntensity {
    /// `1 - prod_l (psi (1 - p_l)^J + 1 - psi)`: membership enters each trap factor.
    PerTrap,
    /// `psi (1 - prod_l (1 - p_l)^J)`: one membership indicator per individual.
    #[default]
    Shared,
}

impl ScrIntensity {
    pub fn as_str(self) -> &'static str {
        match self {
            ScrIntensity::PerTrap => "per-trap",
            ScrIntensity::Shared => "shared",
        }
    }
}

impl std::str::FromStr for ScrIntensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-trap" => Ok(ScrIntensity::PerTrap),
            "shared" => Ok(ScrIntensity::Shared),
            other => Err(Error::config(format!("unknown intensity convention `{other}`"))),
        }
    }
}

pub fn scr_detection_prob(s: Point, x: Point, beta0: f64, beta1: f64) -> f64 {
    logistic(beta0 + beta1 * sq_dist(s, x))
}

/// Evaluates `(1 - p_l)^J` at every trap for one activity center.
///
/// `exp(beta1 d^2)` factors into per-axis terms, so only distinct trap
/// coordinates need an exponential.
#[derive(Debug, Clone)]
struct MissKernel {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ix: Vec<usize>,
    iy: Vec<usize>,
    ex: Vec<f64>,
    ey: Vec<f64>,
    traps: Vec<Point>,
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

impl MissKernel {
    fn new(traps: &[Point]) -> Self {
        let xs = distinct(traps.iter().map(|t| t[0]));
        let ys = distinct(traps.iter().map(|t| t[1]));
        let find = |v: &[f64], x: f64| v.binary_search_by(|a| a.total_cmp(&x)).expect("coordinate present");
        Self {
            ix: traps.iter().map(|t| find(&xs, t[0])).collect(),
            iy: traps.iter().map(|t| find(&ys, t[1])).collect(),
            ex: vec![0.0; xs.len()],
            ey: vec![0.0; ys.len()],
            xs,
            ys,
            traps: traps.to_vec(),
        }
    }

    fn fill(&mut self, s: Point, beta0: f64, beta1: f64, j: u32, out: &mut [f64]) {
        let eb0 = beta0.exp();
        if !(eb0.is_finite() && eb0 > 0.0) {
            for (o, &x) in out.iter_mut().zip(&self.traps) {
                *o = crate::dist::special::miss_prob(beta0 + beta1 * sq_dist(s, x), j);
            }
            return;
        }
        for (e, &x) in self.ex.iter_mut().zip(&self.xs) {
            *e = eb0 * (beta1 * (s[0] - x) * (s[0] - x)).exp();
        }
        for (e, &y) in self.ey.iter_mut().zip(&self.ys) {
            *e = (beta1 * (s[1] - y) * (s[1] - y)).exp();
        }
        let pow = -(j as i32);
        for ((o, &a), &b) in out.iter_mut().zip(&self.ix).zip(&self.iy) {
            *o = (1.0 + self.ex[a] * self.ey[b]).powi(pow);
        }
    }
}

/// Detection-side quantity an individual contributes to the n-model.
#[inline]
fn inclusion(miss: &[f64], psi: f64, intensity: ScrIntensity) -> f64 {
    match intensity {
        ScrIntensity::Shared => psi * (1.0 - miss.iter().product::<f64>()),
        ScrIntensity::PerTrap => 1.0 - miss.iter().map(|m| psi * m + 1.0 - psi).product::<f64>(),
    }
}

/// Truncated log-likelihood of one individual, without the binomial coefficients.
fn individual_loglik(y: &[u32], d2: &[f64], beta: [f64; 2], j: u32) -> f64 {
    let jf = j as f64;
    let (mut lin, mut total_sp) = (0.0, 0.0);
    for (&yl, &d) in y.iter().zip(d2) {
        let eta = beta[0] + beta[1] * d;
        let sp = softplus(eta);
        lin += yl as f64 * eta;
        total_sp += sp;
    }
    lin - jf * total_sp - log1mexp(jf * total_sp)
}

fn log_coefficients(data: &ScrData) -> f64 {
    let j = data.occasions() as u64;
    (0..data.n()).flat_map(|i| data.row(i).iter()).map(|&y| ln_binomial(j, y as u64)).sum()
}

/// Stage-1 log-target: for each individual the binomial trap counts,
/// truncated to at least one detection over the whole array, plus the
/// `beta` prior. Centers outside the region give `-inf`.
pub fn scr_stage1_logtarget(params: &ScrParams, data: &ScrData, priors: &ScrPriors) -> f64 {
    if params.centers.len() != data.n() || params.centers.iter().any(|s| !data.region().contains(*s)) {
        return f64::NEG_INFINITY;
    }
    let beta = [params.beta0, params.beta1];
    let mut d2 = vec![0.0; data.num_traps()];
    let mut total = log_coefficients(data) + priors.beta_logpdf(beta);
    for (i, &s) in params.centers.iter().enumerate() {
        d2.iter_mut().zip(data.traps()).for_each(|(d, &x)| *d = sq_dist(s, x));
        total += individual_loglik(data.row(i), &d2, beta, data.occasions());
    }
    total
}

/// Monte Carlo estimate of `log [n | params]` over uniform activity centers
/// of the `M - n` unobserved individuals.
pub fn scr_n_logpmf_mc(
    params: &ScrParams,
    n: u64,
    spec: NModelSpec,
    intensity: ScrIntensity,
    data: &ScrData,
    mc_draws: usize,
    rng: &mut StreamRng,
) -> Result<f64> {
    let mut kernel = MissKernel::new(data.traps());
    n_logpmf(&mut kernel, params, n, spec, intensity, data, mc_draws, rng)
}

#[allow(clippy::too_many_arguments)]
fn n_logpmf(
    kernel: &mut MissKernel,
    params: &ScrParams,
    n: u64,
    spec: NModelSpec,
    intensity: ScrIntensity,
    data: &ScrData,
    mc_draws: usize,
    rng: &mut StreamRng,
) -> Result<f64> {
    let m = spec.superpop as u64;
    if n > m {
        return Ok(f64::NEG_INFINITY);
    }
    let augmented = (m - n) as usize;
    let (b0, b1, psi, j) = (params.beta0, params.beta1, params.psi, data.occasions());
    let region = *data.region();
    let mut miss = vec![0.0; data.num_traps()];
    let mut logs = Vec::with_capacity(mc_draws);
    match spec.kind {
        NModelKind::Poisson => {
            let mut observed = 0.0;
            for &s in &params.centers {
                kernel.fill(s, b0, b1, j, &mut miss);
                observed += inclusion(&miss, psi, intensity);
            }
            for _ in 0..mc_draws {
                let mut lambda = observed;
                for _ in 0..augmented {
                    let s = region.from_unit(rng.uniform(), rng.uniform());
                    kernel.fill(s, b0, b1, j, &mut miss);
                    lambda += inclusion(&miss, psi, intensity);
                }
                logs.push(pois_logpmf_unchecked(n, lambda));
            }
        }
        NModelKind::PoissonBinomial => {
            let mut prefix = PoissonBinomialDp::new(n as usize);
            for &s in &params.centers {
                kernel.fill(s, b0, b1, j, &mut miss);
                prefix.push(inclusion(&miss, psi, intensity));
            }
            let mut dp = prefix.clone();
            for _ in 0..mc_draws {
                dp.clone_from(&prefix);
                for _ in 0..augmented {
                    let s = region.from_unit(rng.uniform(), rng.uniform());
                    kernel.fill(s, b0, b1, j, &mut miss);
                    dp.push(inclusion(&miss, psi, intensity));
                }
                logs.push(dp.log_pmf(n as usize));
            }
        }
        NModelKind::Binomial => {
            return Err(Error::config("SCR supports the poisbinom and poisson n-models"));
        }
    }
    Ok(log_mean_exp(&logs))
}

/// Monte Carlo estimate of the membership probability of an undetected
/// individual, averaging over a uniform activity center.
pub fn scr_psibar_mc(params: &ScrParams, data: &ScrData, mc_draws: usize, rng: &mut StreamRng) -> f64 {
    let mut kernel = MissKernel::new(data.traps());
    psibar(&mut kernel, params.beta0, params.beta1, params.psi, data, mc_draws, rng)
}

fn psibar(
    kernel: &mut MissKernel,
    beta0: f64,
    beta1: f64,
    psi: f64,
    data: &ScrData,
    mc_draws: usize,
    rng: &mut StreamRng,
) -> f64 {
    if psi >= 1.0 {
        return 1.0;
    }
    let region = data.region();
    let mut miss = vec![0.0; data.num_traps()];
    let total: f64 = (0..mc_draws)
        .map(|_| {
            let s = region.from_unit(rng.uniform(), rng.uniform());
            kernel.fill(s, beta0, beta1, data.occasions(), &mut miss);
            let stay = psi * miss.iter().product::<f64>();
            stay / (stay + 1.0 - psi)
        })
        .sum();
    total / mc_draws as f64
}

/// Draws the number of undetected members: Poisson under the Poisson
/// n-model, binomial otherwise.
pub fn scr_stage3_sample(
    params: &ScrParams,
    n: u64,
    spec: NModelSpec,
    data: &ScrData,
    mc_draws: usize,
    rng: &mut StreamRng,
) -> u64 {
    let mut kernel = MissKernel::new(data.traps());
    let pb = psibar(&mut kernel, params.beta0, params.beta1, params.psi, data, mc_draws, rng);
    draw_n0(pb, n, spec, rng)
}

fn draw_n0(psibar: f64, n: u64, spec: NModelSpec, rng: &mut StreamRng) -> u64 {
    let remaining = (spec.superpop as u64).saturating_sub(n);
    match spec.kind {
        NModelKind::Poisson => rng.poisson(psibar * remaining as f64),
        _ => rng.binomial(remaining, psibar),
    }
}

/// Posterior predictive probability that a member with a uniform activity
/// center is detected at least once anywhere in the array.
pub fn scr_power_to_detect(chain: &Chain, data: &ScrData, rng: &mut StreamRng) -> Result<f64> {
    let beta0 = chain.require("beta0")?;
    let beta1 = chain.require("beta1")?;
    Ok(power(beta0, beta1, data.traps(), data.region(), data.occasions(), rng))
}

fn power(beta0: &[f64], beta1: &[f64], traps: &[Point], region: &Region, j: u32, rng: &mut StreamRng) -> f64 {
    let hits = beta0
        .iter()
        .zip(beta1)
        .filter(|(&b0, &b1)| {
            let s = region.from_unit(rng.uniform(), rng.uniform());
            traps.iter().any(|&x| rng.binomial(j as u64, scr_detection_prob(s, x, b0, b1)) > 0)
        })
        .count();
    hits as f64 / beta0.len() as f64
}

/// One row of the detection-function table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionPoint {
    pub distance_m: f64,
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
}

/// Posterior mean and pointwise 95% interval of `logistic(beta0 + beta1 d^2)`.
pub fn scr_detection_curve(chain: &Chain, distances: &[f64]) -> Result<Vec<DetectionPoint>> {
    let beta0 = chain.require("beta0")?;
    let beta1 = chain.require("beta1")?;
    if let Some(d) = distances.iter().find(|d| !(**d >= 0.0)) {
        return Err(Error::config(format!("distance {d} must be non-negative")));
    }
    let mut p = vec![0.0; beta0.len()];
    Ok(distances
        .iter()
        .map(|&d| {
            p.iter_mut()
                .zip(beta0.iter().zip(beta1))
                .for_each(|(v, (&b0, &b1))| *v = logistic(b0 + b1 * d * d));
            let mean = p.iter().sum::<f64>() / p.len() as f64;
            p.sort_by(f64::total_cmp);
            DetectionPoint { distance_m: d, mean, q025: quantile_sorted(&p, 0.025), q975: quantile_sorted(&p, 0.975) }
        })
        .collect())
}

pub fn detection_curve_csv(points: &[DetectionPoint]) -> String {
    let mut out = String::from("distance_m,mean,q025,q975\n");
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", p.distance_m, p.mean, p.q025, p.q975));
    }
    out
}

#[derive(Debug, Clone)]
pub struct ScrState {
    pub centers: Vec<Point>,
    pub beta: [f64; 2],
    pub psi: f64,
    /// Row-major `n x L` squared distances.
    d2: Vec<f64>,
    loglik: Vec<f64>,
}

/// Stage-1 sampler: bivariate random walks on each activity center, a joint
/// random walk on `(beta0, beta1)`, and a prior draw of `psi`.
#[derive(Debug, Clone)]
pub struct ScrModel {
    data: ScrData,
    priors: ScrPriors,
}

impl ScrModel {
    pub fn new(data: ScrData, priors: ScrPriors) -> Result<Self> {
        priors.validate()?;
        Ok(Self { data, priors })
    }

    pub fn data(&self) -> &ScrData {
        &self.data
    }

    fn region(&self) -> &Region {
        self.data.region()
    }

    fn fill_d2(&self, s: Point, out: &mut [f64]) {
        out.iter_mut().zip(self.data.traps()).for_each(|(d, &x)| *d = sq_dist(s, x));
    }

    fn sweep_centers(&self, st: &mut ScrState, block: &mut RwBlock, rng: &mut StreamRng) {
        let l = self.data.num_traps();
        let j = self.data.occasions();
        let mut d2 = vec![0.0; l];
        for i in 0..st.centers.len() {
            let s = st.centers[i];
            let prop = [s[0] + block.scale() * rng.std_normal(), s[1] + block.scale() * rng.std_normal()];
            if !self.region().contains(prop) {
                block.reject();
                continue;
            }
            self.fill_d2(prop, &mut d2);
            let ll = individual_loglik(self.data.row(i), &d2, st.beta, j);
            if block.accept(ll - st.loglik[i], rng) {
                st.centers[i] = prop;
                st.loglik[i] = ll;
                st.d2[i * l..(i + 1) * l].copy_from_slice(&d2);
            }
        }
    }

    fn sweep_beta(&self, st: &mut ScrState, block: &mut RwBlock, rng: &mut StreamRng) {
        let l = self.data.num_traps();
        let j = self.data.occasions();
        let prop = [
            st.beta[0] + block.scale() * BETA_STEP[0] * rng.std_normal(),
            st.beta[1] + block.scale() * BETA_STEP[1] * rng.std_normal(),
        ];
        let ll: Vec<f64> = (0..st.centers.len())
            .map(|i| individual_loglik(self.data.row(i), &st.d2[i * l..(i + 1) * l], prop, j))
            .collect();
        let ratio = ll.iter().sum::<f64>() - st.loglik.iter().sum::<f64>() + self.priors.beta_logpdf(prop)
            - self.priors.beta_logpdf(st.beta);
        if block.accept(ratio, rng) {
            st.beta = prop;
            st.loglik = ll;
        }
    }
}

impl Stage1Target for ScrModel {
    type State = ScrState;

    fn model_id(&self) -> &str {
        MODEL_ID
    }

    fn column_names(&self) -> Vec<String> {
        let mut names = vec!["beta0".to_string(), "beta1".to_string(), "psi".to_string()];
        for i in 1..=self.data.n() {
            names.push(format!("s_{i}_x"));
            names.push(format!("s_{i}_y"));
        }
        names
    }

    /// Centers at each individual's detection-weighted trap centroid.
    fn initial_state(&self) -> Result<ScrState> {
        let n = self.data.n();
        if n == 0 {
            return Err(Error::data("no observed individuals"));
        }
        let l = self.data.num_traps();
        let centers: Vec<Point> = (0..n)
            .map(|i| {
                let row = self.data.row(i);
                let w: f64 = row.iter().map(|&y| y as f64).sum();
                let mut c = [0.0, 0.0];
                for (&y, x) in row.iter().zip(self.data.traps()) {
                    c[0] += y as f64 * x[0] / w;
                    c[1] += y as f64 * x[1] / w;
                }
                c
            })
            .collect();
        let beta = [logit(0.05), -1e-4];
        let mut d2 = vec![0.0; n * l];
        for (i, &s) in centers.iter().enumerate() {
            self.fill_d2(s, &mut d2[i * l..(i + 1) * l]);
        }
        let loglik = (0..n)
            .map(|i| individual_loglik(self.data.row(i), &d2[i * l..(i + 1) * l], beta, self.data.occasions()))
            .collect();
        Ok(ScrState { centers, beta, psi: 0.5, d2, loglik })
    }

    fn log_target(&self, st: &ScrState) -> f64 {
        let params = ScrParams { centers: st.centers.clone(), beta0: st.beta[0], beta1: st.beta[1], psi: st.psi };
        scr_stage1_logtarget(&params, &self.data, &self.priors)
    }

    fn proposal_blocks(&self, config: &FitConfig) -> Vec<RwBlock> {
        vec![
            RwBlock::new("s", config.scale_or("s", 25.0), TARGET_BIVARIATE),
            RwBlock::new("beta", config.scale_or("beta", 1.0), TARGET_BIVARIATE),
        ]
    }

    fn sweep(&self, st: &mut ScrState, blocks: &mut [RwBlock], rng: &mut StreamRng) {
        let (s, b) = blocks.split_at_mut(1);
        self.sweep_centers(st, &mut s[0], rng);
        self.sweep_beta(st, &mut b[0], rng);
        st.psi = rng.beta(self.priors.a_psi, self.priors.b_psi);
    }

    fn record(&self, st: &ScrState, out: &mut Vec<f64>) {
        out.extend([st.beta[0], st.beta[1], st.psi]);
        for s in &st.centers {
            out.extend_from_slice(s);
        }
    }
}

pub fn default_mc_draws(kind: NModelKind) -> usize {
    match kind {
        NModelKind::Poisson => DEFAULT_MC_POISSON,
        _ => DEFAULT_MC_POISBINOM,
    }
}

/// Three-stage fit of the spatial model.
pub fn fit_scr(data: &ScrData, priors: &ScrPriors, intensity: ScrIntensity, config: &FitConfig) -> Result<PprbFit> {
    let spec = config.n_model;
    if spec.kind == NModelKind::Binomial {
        return Err(Error::config("SCR supports the poisbinom and poisson n-models"));
    }
    let model = ScrModel::new(data.clone(), *priors)?;
    let n = data.n() as u64;
    let mc_n = config.mc_draws_or(default_mc_draws(spec.kind));
    let mc_psibar = config.mc_draws_psibar;
    let kernel = MissKernel::new(data.traps());
    run_pprb(
        &model,
        |row: &[f64], rng: &mut StreamRng| {
            n_logpmf(&mut kernel.clone(), &ScrParams::from_row(row), n, spec, intensity, data, mc_n, rng)
        },
        |row: &[f64], rng: &mut StreamRng| {
            let pb = psibar(&mut kernel.clone(), row[0], row[1], row[2], data, mc_psibar, rng);
            draw_n0(pb, n, spec, rng)
        },
        n,
        config,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::builtin_hare;
    use crate::dist::{rng_stream, special::miss_prob};
    use crate::engine::ChainMeta;
    use crate::models::m0::{m0_n_logpmf, m0_psibar, M0Params};

    /// One trap with the activity-center support collapsed onto it.
    fn point_data() -> ScrData {
        let region = Region::new(30.0, 30.0, 40.0, 40.0).unwrap();
        ScrData::new(vec![[30.0, 40.0]], vec![vec![2], vec![1], vec![1]], 4, region).unwrap()
    }

    fn hare_params(psi: f64) -> ScrParams {
        ScrParams { centers: vec![[100.0, -100.0]; 13], beta0: -2.0, beta1: -1e-4, psi }
    }

    #[test]
    fn detection_prob_examples() {
        assert_eq!(scr_detection_prob([3.0, 4.0], [3.0, 4.0], -1.0, -0.5), logistic(-1.0));
        assert_eq!(scr_detection_prob([0.0, 0.0], [30.0, 40.0], 0.7, 0.0), logistic(0.7));
        assert!((scr_detection_prob([0.0, 0.0], [30.0, 40.0], 0.0, -1e-4) - logistic(-0.25)).abs() < 1e-15);
    }

    #[test]
    fn miss_kernel_matches_direct_formula() {
        let data = builtin_hare();
        let mut k = MissKernel::new(data.traps());
        let mut out = vec![0.0; data.num_traps()];
        for s in [[10.0, -30.0], [612.0, 77.0], [-100.0, -400.0]] {
            k.fill(s, -2.5, -1.2e-4, 5, &mut out);
            for (o, &x) in out.iter().zip(data.traps()) {
                let direct = miss_prob(-2.5 - 1.2e-4 * sq_dist(s, x), 5);
                assert!((o - direct).abs() < 1e-13);
            }
        }
        k.fill([0.0, 0.0], 800.0, -1e-3, 5, &mut out);
        assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn single_trap_reduces_to_truncated_binomial() {
        let data = point_data();
        let priors = ScrPriors::default();
        let params = ScrParams { centers: vec![[30.0, 40.0]; 3], beta0: -0.4, beta1: -1e-3, psi: 0.3 };
        let got = scr_stage1_logtarget(&params, &data, &priors) - priors.beta_logpdf([-0.4, -1e-3]);
        let p = logistic(-0.4);
        let direct: f64 = [2u64, 1, 1].iter().map(|&y| crate::dist::ztbinom_logpmf(y, 4, p).unwrap()).sum();
        assert!((got - direct).abs() < 1e-10);
    }

    #[test]
    fn outside_region_is_impossible() {
        let data = builtin_hare();
        let mut params = hare_params(0.5);
        assert!(scr_stage1_logtarget(&params, &data, &ScrPriors::default()).is_finite());
        params.centers[4] = [1e4, 0.0];
        assert_eq!(scr_stage1_logtarget(&params, &data, &ScrPriors::default()), f64::NEG_INFINITY);
    }

    #[test]
    fn translation_leaves_target_unchanged() {
        let data = builtin_hare();
        let params = ScrParams {
            centers: (0..13).map(|i| [40.0 * i as f64, -25.0 * i as f64]).collect(),
            beta0: -2.6,
            beta1: -9e-5,
            psi: 0.4,
        };
        let shift = [1234.5, -987.25];
        let moved = data.map_coordinates(|p| [p[0] + shift[0], p[1] + shift[1]]).unwrap();
        let moved_params = ScrParams {
            centers: params.centers.iter().map(|s| [s[0] + shift[0], s[1] + shift[1]]).collect(),
            ..params.clone()
        };
        let a = scr_stage1_logtarget(&params, &data, &ScrPriors::default());
        let b = scr_stage1_logtarget(&moved_params, &moved, &ScrPriors::default());
        assert!((a - b).abs() < 1e-9 * a.abs());
    }

    #[test]
    fn degenerate_region_matches_m0() {
        let data = point_data();
        let (b0, b1, psi) = (-0.2, -2e-4, 0.45);
        let p = logistic(b0);
        let params = ScrParams { centers: vec![[30.0, 40.0]; 3], beta0: b0, beta1: b1, psi };
        let mut rng = rng_stream(1, 0);
        let pairs = [(NModelKind::Poisson, NModelKind::Poisson), (NModelKind::PoissonBinomial, NModelKind::Binomial)];
        for (kind, m0_kind) in pairs {
            for intensity in [ScrIntensity::PerTrap, ScrIntensity::Shared] {
                let a = scr_n_logpmf_mc(&params, 3, NModelSpec::new(kind, 40), intensity, &data, 7, &mut rng).unwrap();
                let b = m0_n_logpmf(M0Params { p, psi }, 3, NModelSpec::new(m0_kind, 40), 4);
                assert!((a.exp() - b.exp()).abs() < 1e-3, "{kind:?} {intensity:?}: {a} vs {b}");
            }
        }
        let pb = scr_psibar_mc(&params, &data, 5, &mut rng);
        assert!((pb - m0_psibar(M0Params { p, psi }, 4)).abs() < 1e-12);
    }

    #[test]
    fn zero_membership_and_no_detection() {
        let data = builtin_hare();
        let mut rng = rng_stream(2, 0);
        let spec = NModelSpec::new(NModelKind::Poisson, 50);
        let params = hare_params(0.0);
        assert_eq!(scr_n_logpmf_mc(&params, 13, spec, ScrIntensity::PerTrap, &data, 3, &mut rng).unwrap(), f64::NEG_INFINITY);
        // With psi = 0 the intensity is zero, so only n = 0 has mass.
        let one = ScrData::new(data.traps().to_vec(), vec![data.row(0).to_vec()], 5, *data.region()).unwrap();
        let single = ScrParams { centers: vec![[100.0, -100.0]], ..params.clone() };
        let lambda_zero = scr_n_logpmf_mc(&single, 1, spec, ScrIntensity::Shared, &one, 3, &mut rng).unwrap();
        assert_eq!(lambda_zero, f64::NEG_INFINITY);
        let empty = ScrParams { centers: vec![], ..params.clone() };
        assert_eq!(scr_n_logpmf_mc(&empty, 0, spec, ScrIntensity::PerTrap, &data, 3, &mut rng).unwrap(), 0.0);
        let off = ScrParams { beta0: -800.0, psi: 0.6, ..params.clone() };
        assert!((scr_psibar_mc(&off, &data, 20, &mut rng) - 0.6).abs() < 1e-12);
        let pb_spec = NModelSpec::new(NModelKind::PoissonBinomial, 50);
        let off_lp = scr_n_logpmf_mc(&off, 13, pb_spec, ScrIntensity::Shared, &data, 3, &mut rng).unwrap();
        assert!(off_lp < -1000.0);
        let all = ScrParams { psi: 1.0, ..params };
        assert_eq!(scr_psibar_mc(&all, &data, 20, &mut rng), 1.0);
        assert_eq!(scr_stage3_sample(&ScrParams { psi: 0.0, ..all }, 13, spec, &data, 10, &mut rng), 0);
    }

    #[test]
    fn detection_curve_examples() {
        let meta = ChainMeta::new(MODEL_ID, "stage3", 0);
        let b0: Vec<f64> = (0..200).map(|i| -3.0 + i as f64 / 400.0).collect();
        let b1: Vec<f64> = (0..200).map(|i| -1e-4 - i as f64 * 1e-7).collect();
        let chain = Chain::from_columns(vec!["beta0".into(), "beta1".into()], vec![b0.clone(), b1], meta).unwrap();
        let curve = scr_detection_curve(&chain, &[0.0, 50.0, 100.0, 200.0]).unwrap();
        let mean0 = b0.iter().map(|&b| logistic(b)).sum::<f64>() / 200.0;
        assert!((curve[0].mean - mean0).abs() < 1e-15);
        assert!(curve.windows(2).all(|w| w[1].mean < w[0].mean));
        assert!(curve.iter().all(|c| c.q025 <= c.mean && c.mean <= c.q975));
        assert!(scr_detection_curve(&chain, &[-1.0]).is_err());
        assert!(detection_curve_csv(&curve).starts_with("distance_m,mean,q025,q975\n0,"));
    }

    #[test]
    fn power_to_detect_edges() {
        let data = builtin_hare();
        let mut rng = rng_stream(3, 0);
        let b1 = vec![-1e-4; 500];
        let certain = power(&[60.0; 500], &b1, data.traps(), data.region(), 5, &mut rng);
        assert_eq!(certain, 1.0);
        let none = power(&[-1.0; 500], &b1, data.traps(), data.region(), 0, &mut rng);
        assert_eq!(none, 0.0);
    }

    #[test]
    fn stage1_runs_and_respects_region() {
        let model = ScrModel::new(builtin_hare(), ScrPriors::default()).unwrap();
        let mut config = FitConfig::new(NModelSpec::new(NModelKind::Poisson, 50));
        config.k1 = 2_000;
        let chain = crate::engine::run_stage1(&model, &config).unwrap();
        let region = builtin_hare().region().to_owned();
        for i in 1..=13 {
            let xs = chain.column(&format!("s_{i}_x")).unwrap();
            let ys = chain.column(&format!("s_{i}_y")).unwrap();
            assert!(xs.iter().zip(ys).all(|(&x, &y)| region.contains([x, y])));
        }
        let acc = &chain.meta().acceptance;
        assert!(acc["s"].rate > 0.1 && acc["beta"].rate > 0.1, "{acc:?}");
    }
}
