//! Generative simulators for the homogeneous and spatial models.

use serde::{Deserialize, Serialize};

use super::capture::CaptureHistory;
use super::scr::{sq_dist, Point, Region, ScrData};
use crate::dist::special::logistic;
use crate::dist::{rng_stream, tag, Variates};
use crate::error::{Error, Result};

/// What the simulator actually drew.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    /// True abundance `N = sum z_i`.
    pub abundance: u64,
    /// Number of individuals detected at least once.
    pub observed: u64,
    pub membership: Vec<bool>,
    /// Total detections of each of the `M` superpopulation individuals.
    pub detections: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Point>>,
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(format!("{name} = {v} is outside [0, 1]")))
    }
}

/// Draws `z_i ~ Bern(psi)`, `y_i ~ Binom(J, p)` for members, keeps positive `y_i`.
pub fn simulate_m0(
    superpop: usize,
    psi: f64,
    p: f64,
    occasions: u32,
    seed: u64,
) -> Result<(CaptureHistory, SimTruth)> {
    check_prob("psi", psi)?;
    check_prob("p", p)?;
    if superpop == 0 {
        return Err(Error::config("M must be at least 1"));
    }
    let mut rng = rng_stream(seed, tag::SIMULATE);
    let mut membership = Vec::with_capacity(superpop);
    let mut detections = Vec::with_capacity(superpop);
    for _ in 0..superpop {
        let z = rng.uniform() < psi;
        let y = if z { rng.binomial(occasions as u64, p) as u32 } else { 0 };
        membership.push(z);
        detections.push(y);
    }
    let counts: Vec<u32> = detections.iter().copied().filter(|&y| y > 0).collect();
    let truth = SimTruth {
        abundance: membership.iter().filter(|&&z| z).count() as u64,
        observed: counts.len() as u64,
        membership,
        detections,
        centers: None,
    };
    let history = if counts.is_empty() {
        CaptureHistory::empty(occasions)
    } else {
        CaptureHistory::new(counts, occasions)?
    };
    Ok((history, truth))
}

/// Spatial simulator: uniform activity centers, one membership draw per
/// individual, logit-linear decay in squared distance.
#[allow(clippy::too_many_arguments)]
pub fn simulate_scr(
    superpop: usize,
    psi: f64,
    beta0: f64,
    beta1: f64,
    traps: &[Point],
    region: Region,
    occasions: u32,
    seed: u64,
) -> Result<(ScrData, SimTruth)> {
    check_prob("psi", psi)?;
    if superpop == 0 {
        return Err(Error::config("M must be at least 1"));
    }
    let mut rng = rng_stream(seed, tag::SIMULATE);
    let mut membership = Vec::with_capacity(superpop);
    let mut detections = Vec::with_capacity(superpop);
    let mut centers = Vec::with_capacity(superpop);
    let mut observed_rows = Vec::new();
    for _ in 0..superpop {
        let s = region.from_unit(rng.uniform(), rng.uniform());
        let z = rng.uniform() < psi;
        let row: Vec<u32> = traps
            .iter()
            .map(|&x| {
                if z {
                    let p = logistic(beta0 + beta1 * sq_dist(s, x));
                    rng.binomial(occasions as u64, p) as u32
                } else {
                    0
                }
            })
            .collect();
        let total: u32 = row.iter().sum();
        if total > 0 {
            observed_rows.push(row);
        }
        centers.push(s);
        membership.push(z);
        detections.push(total);
    }
    let truth = SimTruth {
        abundance: membership.iter().filter(|&&z| z).count() as u64,
        observed: observed_rows.len() as u64,
        membership,
        detections,
        centers: Some(centers),
    };
    let ids = (1..=traps.len()).map(|i| i.to_string()).collect();
    let data = ScrData::build(ids, traps.to_vec(), observed_rows, occasions, region)?;
    Ok((data, truth))
}
