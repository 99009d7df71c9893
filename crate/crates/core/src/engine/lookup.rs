//! Parallel precomputation of the conditional n-pmf at every stage-1 draw.

use serde::{Deserialize, Serialize};

use super::chain::Chain;
use super::pool::parallel_map;
use crate::dist::{rng_stream, tag, StreamRng};
use crate::error::{Error, Result};

/// `logpmf_n[k]` is the log-pmf of the observed `n` under stage-1 draw `k`.
///
/// A table built for a subset of draws holds NaN at the skipped indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LookupTable {
    pub logpmf_n: Vec<f64>,
}

impl LookupTable {
    pub fn new(logpmf_n: Vec<f64>) -> Result<Self> {
        if let Some(k) = logpmf_n.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Evaluator { index: k, msg: format!("entry is {}", logpmf_n[k]) });
        }
        Ok(Self { logpmf_n })
    }

    pub fn len(&self) -> usize {
        self.logpmf_n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logpmf_n.is_empty()
    }

    /// `(k, value)` for every evaluated entry.
    pub fn evaluated(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.logpmf_n.iter().copied().enumerate().filter(|(_, v)| !v.is_nan())
    }

    pub fn is_complete(&self) -> bool {
        self.logpmf_n.iter().all(|v| !v.is_nan())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("draw,logpmf_n\n");
        for (k, v) in self.evaluated() {
            out.push_str(&format!("{k},{v}\n"));
        }
        out
    }
}

/// Evaluates `n_logpmf` on every draw of `chain`.
///
/// Draw `k` gets its own random stream keyed by `(seed, k)`, so the table
/// does not depend on `workers`. The first failing index (lowest `k`) is
/// reported.
pub fn precompute_lookup<F>(chain: &Chain, n_logpmf: F, workers: usize, seed: u64) -> Result<LookupTable>
where
    F: Fn(&[f64], &mut StreamRng) -> Result<f64> + Sync + Send,
{
    let all: Vec<usize> = (0..chain.len()).collect();
    precompute_lookup_at(chain, &all, n_logpmf, workers, seed)
}

/// Evaluates only the draws listed in `indices` (sorted); the rest are NaN.
///
/// Entries equal those of the full table because each index keeps its own stream.
pub fn precompute_lookup_at<F>(
    chain: &Chain,
    indices: &[usize],
    n_logpmf: F,
    workers: usize,
    seed: u64,
) -> Result<LookupTable>
where
    F: Fn(&[f64], &mut StreamRng) -> Result<f64> + Sync + Send,
{
    let values = parallel_map(workers, indices.len(), |i| {
        let k = indices[i];
        let row = chain.row(k);
        let mut rng = rng_stream(seed, tag::LOOKUP | k as u64);
        n_logpmf(&row, &mut rng)
    });
    let mut table = vec![f64::NAN; chain.len()];
    for (&k, v) in indices.iter().zip(values) {
        match v {
            Ok(x) if x.is_nan() || x == f64::INFINITY => {
                return Err(Error::Evaluator { index: k, msg: format!("evaluator returned {x}") })
            }
            Ok(x) => table[k] = x,
            Err(e) => return Err(Error::Evaluator { index: k, msg: e.to_string() }),
        }
    }
    Ok(LookupTable { logpmf_n: table })
}
