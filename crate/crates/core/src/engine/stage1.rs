//! Stage 1: a single Markov chain on the observed-data posterior.

use std::collections::BTreeMap;

use super::chain::{AcceptanceStat, Chain, ChainMeta};
use super::config::FitConfig;
use crate::dist::{rng_stream, tag, StreamRng, Variates};
use crate::error::{Error, Result};

/// Iterations between scale adaptations during burn-in.
pub const ADAPT_INTERVAL: usize = 50;
/// Target acceptance for a scalar random-walk block.
pub const TARGET_SCALAR: f64 = 0.44;
/// Target acceptance for a two-dimensional random-walk block.
pub const TARGET_BIVARIATE: f64 = 0.35;

/// A posterior that can be sampled block by block.
pub trait Stage1Target {
    type State: Clone;

    fn model_id(&self) -> &str;

    /// Column names, in the order `record` writes them.
    fn column_names(&self) -> Vec<String>;

    fn initial_state(&self) -> Result<Self::State>;

    /// Log-density of the stage-1 posterior, up to a constant.
    fn log_target(&self, state: &Self::State) -> f64;

    fn proposal_blocks(&self, config: &FitConfig) -> Vec<RwBlock>;

    /// One full sweep of block updates.
    fn sweep(&self, state: &mut Self::State, blocks: &mut [RwBlock], rng: &mut StreamRng);

    fn record(&self, state: &Self::State, out: &mut Vec<f64>);
}

/// Gaussian random-walk block with acceptance bookkeeping and scale tuning.
#[derive(Debug, Clone)]
pub struct RwBlock {
    group: String,
    scale: f64,
    target: f64,
    accepted: u64,
    proposed: u64,
    window_accepted: u64,
    window_proposed: u64,
    rounds: u64,
}

impl RwBlock {
    pub fn new(group: impl Into<String>, scale: f64, target: f64) -> Self {
        Self {
            group: group.into(),
            scale,
            target,
            accepted: 0,
            proposed: 0,
            window_accepted: 0,
            window_proposed: 0,
            rounds: 0,
        }
    }

    pub fn scalar(group: impl Into<String>, scale: f64) -> Self {
        Self::new(group, scale, TARGET_SCALAR)
    }

    pub fn group(&self) -> &str {
        &self.group
    }

    #[inline]
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Metropolis-Hastings accept step; records the outcome.
    #[inline]
    pub fn accept(&mut self, log_ratio: f64, rng: &mut StreamRng) -> bool {
        let ok = log_ratio >= 0.0 || rng.uniform().ln() < log_ratio;
        self.record(ok);
        ok
    }

    /// Counts a proposal rejected without evaluating the target.
    #[inline]
    pub fn reject(&mut self) {
        self.record(false);
    }

    #[inline]
    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.window_proposed += 1;
        if accepted {
            self.accepted += 1;
            self.window_accepted += 1;
        }
    }

    /// Nudges `log(scale)` toward the target rate with a shrinking step.
    pub(crate) fn adapt(&mut self) {
        if self.window_proposed == 0 {
            return;
        }
        self.rounds += 1;
        let rate = self.window_accepted as f64 / self.window_proposed as f64;
        let step = (1.0 / (self.rounds as f64).sqrt()).min(0.5);
        self.scale *= if rate > self.target { step.exp() } else { (-step).exp() };
        self.window_accepted = 0;
        self.window_proposed = 0;
    }

    pub(crate) fn reset(&mut self) {
        self.accepted = 0;
        self.proposed = 0;
        self.window_accepted = 0;
        self.window_proposed = 0;
    }
}

/// Acceptance counts pooled by group name.
pub fn acceptance_by_group(blocks: &[RwBlock]) -> BTreeMap<String, AcceptanceStat> {
    let mut tally: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for b in blocks {
        let e = tally.entry(b.group.clone()).or_default();
        e.0 += b.accepted;
        e.1 += b.proposed;
    }
    tally.into_iter().map(|(g, (a, p))| (g, AcceptanceStat::new(a, p))).collect()
}

/// Runs burn-in plus `config.k1` retained iterations of `target`.
///
/// Scales adapt only during burn-in and are frozen afterwards; acceptance
/// statistics cover retained iterations only.
pub fn run_stage1<T: Stage1Target>(target: &T, config: &FitConfig) -> Result<Chain> {
    config.validate()?;
    let mut state = target.initial_state()?;
    let lt = target.log_target(&state);
    if !lt.is_finite() {
        return Err(Error::Init(format!(
            "{}: log-target at the initial state is {lt}",
            target.model_id()
        )));
    }
    let mut rng = rng_stream(config.seed, tag::STAGE1);
    let mut blocks = target.proposal_blocks(config);
    let burn = config.burn_in_iters();
    let names = target.column_names();
    let width = names.len();
    let mut chain = Chain::with_capacity(
        names,
        ChainMeta::new(target.model_id(), "stage1", config.seed),
        config.k1,
    );
    let mut row = Vec::with_capacity(width);
    for it in 0..burn + config.k1 {
        target.sweep(&mut state, &mut blocks, &mut rng);
        if it < burn {
            if config.adapt && (it + 1) % ADAPT_INTERVAL == 0 {
                blocks.iter_mut().for_each(RwBlock::adapt);
            }
            if it + 1 == burn {
                blocks.iter_mut().for_each(RwBlock::reset);
            }
            continue;
        }
        row.clear();
        target.record(&state, &mut row);
        chain.push_row(&row);
    }
    chain.meta_mut().acceptance = acceptance_by_group(&blocks);
    Ok(chain)
}
