use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Conditional distribution assumed for the number of observed individuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NModelKind {
    Binomial,
    #[serde(rename = "poisbinom")]
    PoissonBinomial,
    Poisson,
}

impl NModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NModelKind::Binomial => "binomial",
            NModelKind::PoissonBinomial => "poisbinom",
            NModelKind::Poisson => "poisson",
        }
    }
}

impl std::str::FromStr for NModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binomial" => Ok(NModelKind::Binomial),
            "poisbinom" | "poisson-binomial" => Ok(NModelKind::PoissonBinomial),
            "poisson" => Ok(NModelKind::Poisson),
            other => Err(Error::config(format!("unknown n-model `{other}`"))),
        }
    }
}

/// Which stage-1 draws get a lookup-table entry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LookupScope {
    /// Every stage-1 draw.
    #[default]
    All,
    /// Only draws that stage 2 proposes (plus its starting draw).
    Proposed,
}

impl std::str::FromStr for LookupScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(LookupScope::All),
            "proposed" => Ok(LookupScope::Proposed),
            other => Err(Error::config(format!("unknown lookup scope `{other}`"))),
        }
    }
}

/// The n-model together with the superpopulation size `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NModelSpec {
    pub kind: NModelKind,
    pub superpop: usize,
}

impl NModelSpec {
    pub fn new(kind: NModelKind, superpop: usize) -> Self {
        Self { kind, superpop }
    }

    pub fn check_against(&self, n: usize) -> Result<()> {
        if self.superpop < n {
            return Err(Error::config(format!(
                "superpopulation M = {} is smaller than the {n} observed individuals",
                self.superpop
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Retained stage-1 draws (burn-in is extra).
    pub k1: usize,
    /// Stage-2 iterations.
    pub k2: usize,
    /// Burn-in length as a fraction of `k1`.
    pub burn_in: f64,
    /// Monte Carlo replicates per n-pmf evaluation; `None` picks the model default.
    pub mc_draws_n: Option<usize>,
    /// Monte Carlo replicates per membership-probability average in stage 3.
    pub mc_draws_psibar: usize,
    /// Initial random-walk scales keyed by block group name.
    pub proposal_scales: BTreeMap<String, f64>,
    pub adapt: bool,
    pub seed: u64,
    pub workers: usize,
    pub n_model: NModelSpec,
    #[serde(default)]
    pub lookup: LookupScope,
}

impl FitConfig {
    pub fn new(n_model: NModelSpec) -> Self {
        Self {
            k1: 100_000,
            k2: 100_000,
            burn_in: 0.1,
            mc_draws_n: None,
            mc_draws_psibar: 1000,
            proposal_scales: BTreeMap::new(),
            adapt: true,
            seed: 1,
            workers: default_workers(),
            n_model,
            lookup: LookupScope::All,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k1 == 0 || self.k2 == 0 {
            return Err(Error::config("K1 and K2 must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::config(format!("burn_in = {} must lie in [0, 1)", self.burn_in)));
        }
        if self.mc_draws_n == Some(0) || self.mc_draws_psibar == 0 {
            return Err(Error::config("Monte Carlo sizes must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        if let Some((k, v)) = self.proposal_scales.iter().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::config(format!("proposal scale `{k}` = {v} must be positive")));
        }
        Ok(())
    }

    pub fn burn_in_iters(&self) -> usize {
        (self.burn_in * self.k1 as f64).floor() as usize
    }

    pub fn scale_or(&self, group: &str, default: f64) -> f64 {
        self.proposal_scales.get(group).copied().unwrap_or(default)
    }

    pub fn mc_draws_or(&self, default: usize) -> usize {
        self.mc_draws_n.unwrap_or(default)
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
