//! Browser bindings: a detection-function explorer, a comparison of the
//! binomial and Poisson n-models, and a small homogeneous-model fit.
//!
//! Every function returns a JSON string so the page can stay plain JavaScript.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::Serialize;
use wasm_bindgen::prelude::*;

use recap::data::CaptureHistory;
use recap::engine::{summarize, FitConfig, NModelKind, NModelSpec};
use recap::models::m0::{fit_m0, m0_n_logpmf, m0_power_to_detect, M0Params, M0Priors};
use recap::models::scr::scr_detection_prob;

fn to_js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn json(v: &impl Serialize) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(to_js)
}

#[derive(Serialize)]
struct Curve {
    distance: Vec<f64>,
    probability: Vec<f64>,
}

/// Per-occasion detection probability `logistic(beta0 + beta1 d^2)` on `points` distances in `[0, max_distance]`.
#[wasm_bindgen]
pub fn detection_curve(beta0: f64, beta1: f64, max_distance: f64, points: usize) -> Result<String, JsValue> {
    if !(max_distance > 0.0) || points < 2 {
        return Err(to_js("need a positive distance and at least two points"));
    }
    let distance: Vec<f64> = (0..points).map(|i| max_distance * i as f64 / (points - 1) as f64).collect();
    let probability = distance.iter().map(|&d| scr_detection_prob([0.0, 0.0], [d, 0.0], beta0, beta1)).collect();
    json(&Curve { distance, probability })
}

#[derive(Serialize)]
struct NPmfs {
    n: Vec<u64>,
    binomial: Vec<f64>,
    poisson: Vec<f64>,
    total_variation: f64,
}

/// Distribution of the number of detected individuals under both n-models.
#[wasm_bindgen]
pub fn n_pmf_comparison(p: f64, psi: f64, superpop: usize, occasions: u32) -> Result<String, JsValue> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&psi) || superpop == 0 || occasions == 0 {
        return Err(to_js("p and psi must lie in [0, 1]; M and J must be positive"));
    }
    let params = M0Params { p, psi };
    let eval = |kind, n| m0_n_logpmf(params, n, NModelSpec::new(kind, superpop), occasions).exp();
    let n: Vec<u64> = (0..=superpop as u64).collect();
    let binomial: Vec<f64> = n.iter().map(|&k| eval(NModelKind::Binomial, k)).collect();
    let poisson: Vec<f64> = n.iter().map(|&k| eval(NModelKind::Poisson, k)).collect();
    let total_variation = 0.5 * binomial.iter().zip(&poisson).map(|(a, b)| (a - b).abs()).sum::<f64>();
    json(&NPmfs { n, binomial, poisson, total_variation })
}

#[derive(Serialize)]
struct M0Fit {
    observed: usize,
    power_to_detect: f64,
    stage2_acceptance: f64,
    summary: recap::engine::ChainSummary,
}

/// Staged fit of the homogeneous model to whitespace- or comma-separated detection counts.
#[wasm_bindgen]
pub fn fit_m0_counts(counts: &str, occasions: u32, superpop: usize, draws: usize, seed: u64) -> Result<String, JsValue> {
    let counts: Vec<u32> = counts
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| to_js(format!("`{s}` is not a count"))))
        .collect::<Result<_, _>>()?;
    let data = CaptureHistory::new(counts, occasions).map_err(to_js)?;
    let mut config = FitConfig::new(NModelSpec::new(NModelKind::Binomial, superpop));
    config.k1 = draws;
    config.k2 = draws;
    config.seed = seed;
    config.workers = 1;
    let fit = fit_m0(&data, &M0Priors::default(), &config).map_err(to_js)?;
    json(&M0Fit {
        observed: data.n(),
        power_to_detect: m0_power_to_detect(&fit.posterior, occasions).map_err(to_js)?,
        stage2_acceptance: fit.stage2.meta().acceptance.get("pprb").map_or(f64::NAN, |a| a.rate),
        summary: summarize(&fit.posterior),
    })
}
