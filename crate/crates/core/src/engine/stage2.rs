//! Stage 2: Metropolis-Hastings over stage-1 draws using the lookup table.
//!
//! Proposals are stage-1 draws picked uniformly with replacement. Because the
//! stage-1 posterior is the proposal, everything but the n-pmf cancels and the
//! acceptance ratio is `exp(table[proposed] - table[current])`.

use rand::Rng;

use super::chain::{AcceptanceStat, Chain, ChainMeta};
use super::lookup::LookupTable;
use crate::dist::{rng_stream, tag, StreamRng, Variates};
use crate::error::{Error, Result};

/// Name of the column holding the selected stage-1 index.
pub const DRAW_COLUMN: &str = "draw";

/// Proposals and log-uniforms for every stage-2 iteration.
///
/// Neither depends on table values, so the whole schedule is drawn up front.
/// That also tells which table entries stage 2 can ever read.
#[derive(Debug, Clone)]
pub struct PprbSchedule {
    start: usize,
    proposals: Vec<usize>,
    log_u: Vec<f64>,
}

impl PprbSchedule {
    pub fn draw(len: usize, iterations: usize, seed: u64) -> Result<Self> {
        if len == 0 {
            return Err(Error::data("empty lookup table"));
        }
        let mut rng = rng_stream(seed, tag::STAGE2);
        Ok(Self::draw_with(len, iterations, &mut rng))
    }

    fn draw_with(len: usize, iterations: usize, rng: &mut StreamRng) -> Self {
        let start = rng.random_range(0..len);
        let mut proposals = Vec::with_capacity(iterations);
        let mut log_u = Vec::with_capacity(iterations);
        for _ in 0..iterations {
            proposals.push(rng.random_range(0..len));
            log_u.push(rng.uniform().ln());
        }
        Self { start, proposals, log_u }
    }

    pub fn iterations(&self) -> usize {
        self.proposals.len()
    }

    /// Sorted distinct stage-1 indices the walk may visit.
    pub fn required(&self) -> Vec<usize> {
        let mut idx = self.proposals.clone();
        idx.push(self.start);
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    /// Runs the index chain; returns visited indices and the accept count.
    pub fn walk(&self, table: &LookupTable) -> Result<(Vec<usize>, u64)> {
        if table.evaluated().all(|(_, v)| v == f64::NEG_INFINITY) {
            return Err(Error::AllImpossible);
        }
        let t = &table.logpmf_n;
        if let Some(&k) = self.required().iter().find(|&&k| k >= t.len() || t[k].is_nan()) {
            return Err(Error::data(format!("lookup table lacks entry {k} needed by stage 2")));
        }
        let mut current = self.start;
        let mut accepted = 0u64;
        let mut visited = Vec::with_capacity(self.iterations());
        for (&proposal, &log_u) in self.proposals.iter().zip(&self.log_u) {
            let ok = proposal == current || t[proposal] >= t[current] || log_u < t[proposal] - t[current];
            if ok {
                current = proposal;
                accepted += 1;
            }
            visited.push(current);
        }
        Ok((visited, accepted))
    }
}

/// Runs the index chain only; returns visited indices and the accept count.
pub fn pprb_indices(table: &LookupTable, iterations: usize, rng: &mut StreamRng) -> Result<(Vec<usize>, u64)> {
    if table.is_empty() {
        return Err(Error::data("empty lookup table"));
    }
    PprbSchedule::draw_with(table.len(), iterations, rng).walk(table)
}

/// Stage-2 chain of length `iterations`: the visited stage-1 draws plus a
/// `draw` column with their indices.
pub fn run_stage2_pprb(chain: &Chain, table: &LookupTable, iterations: usize, seed: u64) -> Result<Chain> {
    let schedule = PprbSchedule::draw(chain.len(), iterations, seed)?;
    run_stage2_scheduled(chain, table, &schedule, seed)
}

/// As [`run_stage2_pprb`] with a schedule drawn beforehand.
pub fn run_stage2_scheduled(chain: &Chain, table: &LookupTable, schedule: &PprbSchedule, seed: u64) -> Result<Chain> {
    if table.len() != chain.len() {
        return Err(Error::data(format!(
            "lookup table has {} entries for {} stage-1 draws",
            table.len(),
            chain.len()
        )));
    }
    let (indices, accepted) = schedule.walk(table)?;
    let mut meta = ChainMeta::new(chain.meta().model.clone(), "stage2", seed);
    meta.acceptance
        .insert("pprb".into(), AcceptanceStat::new(accepted, schedule.iterations() as u64));
    let mut out = chain.select(&indices, meta);
    if out.index_of(DRAW_COLUMN).is_none() {
        out.push_column(DRAW_COLUMN, indices.iter().map(|&k| k as f64).collect())?;
    }
    Ok(out)
}
