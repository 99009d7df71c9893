//! Stage 3: abundance as a derived quantity, `N = n + N0`.

use super::chain::{Chain, ChainMeta};
use super::pool::parallel_map;
use crate::dist::{rng_stream, tag, StreamRng};
use crate::error::Result;

/// Appends `N0` and `N` columns to a stage-2 chain.
///
/// `n0_sampler` draws from the full conditional of the undetected members
/// given one stage-2 draw. Draw `k` uses stream `(seed, k)`.
pub fn run_stage3<F>(chain2: &Chain, n0_sampler: F, n: u64, workers: usize, seed: u64) -> Result<Chain>
where
    F: Fn(&[f64], &mut StreamRng) -> u64 + Sync + Send,
{
    let n0: Vec<u64> = parallel_map(workers, chain2.len(), |k| {
        let row = chain2.row(k);
        let mut rng = rng_stream(seed, tag::STAGE3 | k as u64);
        n0_sampler(&row, &mut rng)
    });
    let meta = ChainMeta {
        stage: "stage3".into(),
        seed,
        ..chain2.meta().clone()
    };
    let mut out = chain2.select(&(0..chain2.len()).collect::<Vec<_>>(), meta);
    out.push_column("N0", n0.iter().map(|&v| v as f64).collect())?;
    out.push_column("N", n0.iter().map(|&v| (v + n) as f64).collect())?;
    Ok(out)
}
