//! The full recursion: stage 1, lookup precompute, stage 2, stage 3.

use serde::{Deserialize, Serialize};

use super::chain::Chain;
use super::config::FitConfig;
use super::config::LookupScope;
use super::lookup::{precompute_lookup, precompute_lookup_at, LookupTable};
use super::stage1::{run_stage1, Stage1Target};
use super::stage2::{run_stage2_scheduled, PprbSchedule};
use super::stage3::run_stage3;
use crate::dist::StreamRng;
use crate::error::Result;

/// Wall-clock seconds spent in each stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub stage1: f64,
    pub lookup: f64,
    pub stage2: f64,
    pub stage3: f64,
}

#[derive(Debug, Clone)]
pub struct PprbFit {
    pub stage1: Chain,
    pub table: LookupTable,
    pub stage2: Chain,
    /// Stage-2 draws with `N0` and `N` appended.
    pub posterior: Chain,
    pub timings: StageTimings,
}

#[cfg(not(target_arch = "wasm32"))]
struct Stopwatch(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Stopwatch {
    fn start() -> Self {
        Self(std::time::Instant::now())
    }
    fn lap(&mut self) -> f64 {
        let s = self.0.elapsed().as_secs_f64();
        self.0 = std::time::Instant::now();
        s
    }
}

// No monotonic clock on bare wasm32.
#[cfg(target_arch = "wasm32")]
struct Stopwatch;

#[cfg(target_arch = "wasm32")]
impl Stopwatch {
    fn start() -> Self {
        Self
    }
    fn lap(&mut self) -> f64 {
        0.0
    }
}

/// Runs the stages strictly in order. With [`LookupScope::Proposed`] the
/// table is filled only where stage 2 can look; the stage-2 chain is the same
/// either way. Each stage draws from its own streams
/// derived from `config.seed`.
pub fn run_pprb<T, L, S>(target: &T, n_logpmf: L, n0_sampler: S, n: u64, config: &FitConfig) -> Result<PprbFit>
where
    T: Stage1Target,
    L: Fn(&[f64], &mut StreamRng) -> Result<f64> + Sync + Send,
    S: Fn(&[f64], &mut StreamRng) -> u64 + Sync + Send,
{
    config.validate()?;
    config.n_model.check_against(n as usize)?;
    let mut clock = Stopwatch::start();
    let mut timings = StageTimings::default();

    let stage1 = run_stage1(target, config)?;
    timings.stage1 = clock.lap();

    let schedule = PprbSchedule::draw(stage1.len(), config.k2, config.seed)?;
    let table = match config.lookup {
        LookupScope::All => precompute_lookup(&stage1, n_logpmf, config.workers, config.seed)?,
        LookupScope::Proposed => {
            precompute_lookup_at(&stage1, &schedule.required(), n_logpmf, config.workers, config.seed)?
        }
    };
    timings.lookup = clock.lap();

    let stage2 = run_stage2_scheduled(&stage1, &table, &schedule, config.seed)?;
    timings.stage2 = clock.lap();

    let posterior = run_stage3(&stage2, n0_sampler, n, config.workers, config.seed)?;
    timings.stage3 = clock.lap();

    Ok(PprbFit { stage1, table, stage2, posterior, timings })
}
