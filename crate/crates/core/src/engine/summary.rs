//! Posterior summaries: moments, quantiles, batch-means ESS, PMFs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::chain::{AcceptanceStat, Chain};
use super::stage2::DRAW_COLUMN;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfEntry {
    pub value: i64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    /// `None` when the column is constant.
    pub ess: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pmf: Option<Vec<PmfEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub model: String,
    pub stage: String,
    pub draws: usize,
    pub acceptance: BTreeMap<String, AcceptanceStat>,
    pub columns: Vec<ColumnSummary>,
}

impl ChainSummary {
    pub fn column(&self, name: &str) -> Option<&ColumnSummary> {
        self.columns.iter().find(|c| c.name == name)
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Linear-interpolation quantile of sorted data (R's default, type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Effective sample size from `floor(sqrt(K))` non-overlapping batch means.
pub fn batch_means_ess(x: &[f64]) -> Option<f64> {
    let k = x.len();
    let batches = (k as f64).sqrt().floor() as usize;
    if batches < 2 {
        return None;
    }
    let size = k / batches;
    let var = variance(x);
    if var == 0.0 || !var.is_finite() {
        return None;
    }
    let means: Vec<f64> = x[..batches * size].chunks(size).map(mean).collect();
    let bm_var = size as f64 * variance(&means);
    if bm_var == 0.0 {
        return None;
    }
    Some(k as f64 * var / bm_var)
}

fn integer_valued(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite() && v.fract() == 0.0)
}

pub fn pmf(x: &[f64]) -> Vec<PmfEntry> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &v in x {
        *counts.entry(v as i64).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(value, c)| PmfEntry { value, probability: c as f64 / x.len() as f64 })
        .collect()
}

pub fn summarize_column(name: &str, x: &[f64]) -> ColumnSummary {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    ColumnSummary {
        name: name.to_string(),
        mean: mean(x),
        sd: variance(x).sqrt(),
        q025: quantile_sorted(&sorted, 0.025),
        q50: quantile_sorted(&sorted, 0.5),
        q975: quantile_sorted(&sorted, 0.975),
        ess: batch_means_ess(x),
        pmf: integer_valued(x).then(|| pmf(x)),
    }
}

/// Summarizes every parameter column (the stage-2 `draw` index is skipped).
pub fn summarize(chain: &Chain) -> ChainSummary {
    let columns = chain
        .columns()
        .filter(|(name, _)| *name != DRAW_COLUMN)
        .map(|(name, x)| summarize_column(name, x))
        .collect();
    ChainSummary {
        model: chain.meta().model.clone(),
        stage: chain.meta().stage.clone(),
        draws: chain.len(),
        acceptance: chain.meta().acceptance.clone(),
        columns,
    }
}

/// Gaussian kernel density on an even grid spanning the data (Silverman bandwidth).
pub fn density_grid(x: &[f64], points: usize) -> Vec<(f64, f64)> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let sd = variance(x).sqrt();
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if spread == 0.0 || points < 2 {
        return vec![(lo, 1.0)];
    }
    let bw = 0.9 * spread * (x.len() as f64).powf(-0.2);
    let norm = 1.0 / (x.len() as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    let (start, end) = (lo - 3.0 * bw, hi + 3.0 * bw);
    (0..points)
        .map(|i| {
            let g = start + (end - start) * i as f64 / (points - 1) as f64;
            // Only kernels within 8 bandwidths contribute measurably.
            let a = sorted.partition_point(|v| *v < g - 8.0 * bw);
            let b = sorted.partition_point(|v| *v <= g + 8.0 * bw);
            let d: f64 = sorted[a..b]
                .iter()
                .map(|v| (-0.5 * ((g - v) / bw).powi(2)).exp())
                .sum();
            (g, d * norm)
        })
        .collect()
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_one_sample(x: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = x.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter().enumerate().fold(0.0, |d, (i, &v)| {
        let f = cdf(v);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}
