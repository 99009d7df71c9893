//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//! A FAIL only makes the target exit non-zero when `RECAP_ACCEPTANCE_STRICT=1`.
//!
//! `cargo test -p recap-core --test acceptance -- 1 5` runs a subset.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use recap::data::{builtin_hare, builtin_salamander, builtin_simulated_m0, CaptureHistory, Region, ScrData};
use recap::dist::special::{logistic, softplus};
use recap::dist::{
    binom_logpmf, normal_logpdf, poisbinom_logpmf, rng_stream, tag, ztbinom_logpmf, ProbVector, Variates,
};
use recap::engine::{
    ks_one_sample, ks_two_sample, pprb_indices, read_chain, summarize, write_chain, ChainSummary, FitConfig,
    LookupScope, LookupTable, NModelKind, NModelSpec, PprbFit,
};
use recap::models::m0::{fit_m0, m0_n_logpmf, m0_single_stage_fit, M0Params, M0Priors};
use recap::models::mh::{fit_mh, fit_mh_with, mh_n_logpmf_mc, mh_power_to_detect, MhModel, MhParams, MhPriors};
use recap::models::scr::{
    fit_scr, scr_detection_curve, scr_n_logpmf_mc, scr_power_to_detect, ScrIntensity, ScrParams, ScrPriors,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(lines: &mut Vec<String>, pass: &mut bool, ok: bool, what: String) {
    *pass &= ok;
    lines.push(format!("{} {what}", if ok { "ok " } else { "BAD" }));
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn criterion_1() -> Outcome {
    let data = builtin_simulated_m0();
    let mut config = FitConfig::new(NModelSpec::new(NModelKind::Binomial, 100));
    config.k1 = 200_000;
    config.k2 = 200_000;
    config.seed = 2024;
    let start = Instant::now();
    let oracle = m0_single_stage_fit(&data, &M0Priors::default(), config.n_model, &config).unwrap();
    let fit = fit_m0(&data, &M0Priors::default(), &config).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (mut lines, mut pass) = (Vec::new(), true);
    for (name, tol) in [("p", 0.01), ("psi", 0.01), ("N", 1.0)] {
        let a = oracle.column(name).unwrap();
        let b = fit.posterior.column(name).unwrap();
        let d = (mean(a) - mean(b)).abs();
        check(&mut lines, &mut pass, d < tol, format!("mean {name}: single {:.4} staged {:.4} (|diff| {d:.4} < {tol})", mean(a), mean(b)));
        let ks = ks_two_sample(a, b);
        check(&mut lines, &mut pass, ks < 0.02, format!("KS {name} = {ks:.4} < 0.02"));
    }
    let s = summarize(&fit.posterior);
    lines.push(format!("    ESS staged p {:.0}, oracle p {:.0}", s.column("p").unwrap().ess.unwrap_or(0.0), summarize(&oracle).column("p").unwrap().ess.unwrap_or(0.0)));
    check(&mut lines, &mut pass, secs < 120.0, format!("runtime {secs:.1}s < 120s"));
    Outcome { pass, detail: lines.join("\n    ") }
}

fn col<'a>(s: &'a ChainSummary, name: &str) -> &'a recap::engine::ColumnSummary {
    s.column(name).unwrap_or_else(|| panic!("no column {name}"))
}

fn near(lines: &mut Vec<String>, pass: &mut bool, what: &str, got: f64, want: f64, tol: f64) {
    check(lines, pass, (got - want).abs() <= tol, format!("{what} = {got:.4} (target {want} +/- {tol})"));
}

fn salamander_config(kind: NModelKind, k: usize) -> FitConfig {
    let mut config = FitConfig::new(NModelSpec::new(kind, 1500));
    config.k1 = k;
    config.k2 = k;
    config.seed = 2019;
    config.lookup = LookupScope::Proposed;
    config
}

struct SalamanderRun {
    fit: PprbFit,
    summary: ChainSummary,
    power: f64,
    secs: f64,
}

fn salamander_run(kind: NModelKind, k: usize, mc: Option<usize>) -> SalamanderRun {
    let data = builtin_salamander();
    let mut config = salamander_config(kind, k);
    config.mc_draws_n = mc;
    let start = Instant::now();
    let fit = fit_mh(&data, &MhPriors::default(), &config).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let power = mh_power_to_detect(&fit.posterior, data.occasions(), &mut rng_stream(config.seed, tag::PREDICTIVE)).unwrap();
    let summary = summarize(&fit.posterior);
    SalamanderRun { fit, summary, power, secs }
}

fn salamander_poisson() -> &'static SalamanderRun {
    static RUN: OnceLock<SalamanderRun> = OnceLock::new();
    RUN.get_or_init(|| salamander_run(NModelKind::Poisson, 100_000, None))
}

fn describe_n(s: &ChainSummary) -> String {
    let n = col(s, "N");
    format!("N mean {:.2}, 95% CI [{}, {}], ESS {:.0}", n.mean, n.q025, n.q975, n.ess.unwrap_or(0.0))
}

fn criterion_2() -> Outcome {
    let run = salamander_poisson();
    let (mut lines, mut pass) = (Vec::new(), true);
    lines.push(format!("    {}; stage-2 acceptance {:.3}", describe_n(&run.summary), run.fit.stage2.meta().acceptance["pprb"].rate));
    let n = col(&run.summary, "N");
    near(&mut lines, &mut pass, "E(N|y)", n.mean, 263.6, 10.0);
    near(&mut lines, &mut pass, "N 2.5%", n.q025, 180.0, 15.0);
    near(&mut lines, &mut pass, "N 97.5%", n.q975, 407.0, 15.0);
    near(&mut lines, &mut pass, "power to detect", run.power, 0.36, 0.02);
    let t = &run.fit.timings;
    lines.push(format!(
        "    stages: stage1 {:.0}s, lookup {:.0}s ({} entries), stage2 {:.1}s, stage3 {:.0}s",
        t.stage1,
        t.lookup,
        run.fit.table.evaluated().count(),
        t.stage2,
        t.stage3
    ));
    check(&mut lines, &mut pass, run.secs < 1800.0, format!("runtime {:.0}s < 1800s", run.secs));
    Outcome { pass, detail: lines.join("\n    ") }
}

fn criterion_3() -> Outcome {
    let run = salamander_run(NModelKind::PoissonBinomial, 20_000, Some(100));
    let (mut lines, mut pass) = (Vec::new(), true);
    lines.push(format!("    {}; runtime {:.0}s", describe_n(&run.summary), run.secs));
    let n = col(&run.summary, "N");
    near(&mut lines, &mut pass, "E(N|y)", n.mean, 261.3, 15.0);
    near(&mut lines, &mut pass, "N 2.5%", n.q025, 195.0, 20.0);
    near(&mut lines, &mut pass, "N 97.5%", n.q975, 356.0, 20.0);
    let poisson = salamander_poisson();
    for (name, tol) in [("mu", 0.1), ("sigma2", 0.2), ("psi", 0.02)] {
        let a = col(&run.summary, name).mean;
        let b = col(&poisson.summary, name).mean;
        check(&mut lines, &mut pass, (a - b).abs() <= tol, format!("mean {name}: poisbinom {a:.4} vs poisson {b:.4} (tol {tol})"));
    }
    Outcome { pass, detail: lines.join("\n    ") }
}

fn hare_fit(kind: NModelKind, intensity: ScrIntensity, k: usize) -> (PprbFit, ChainSummary, f64) {
    let mut config = FitConfig::new(NModelSpec::new(kind, 50));
    config.k1 = k;
    config.k2 = k;
    config.seed = 2020;
    config.lookup = LookupScope::Proposed;
    let start = Instant::now();
    let fit = fit_scr(&builtin_hare(), &ScrPriors::default(), intensity, &config).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let summary = summarize(&fit.posterior);
    (fit, summary, secs)
}

fn criterion_4() -> Outcome {
    let (mut lines, mut pass) = (Vec::new(), true);
    let data = builtin_hare();
    let cases = [
        (NModelKind::PoissonBinomial, 14.2, (13.0, 17.0), 3600.0),
        (NModelKind::Poisson, 14.3, (13.0, 18.0), 1500.0),
    ];
    for (kind, mean, (lo, hi), budget) in cases {
        let (fit, s, secs) = hare_fit(kind, ScrIntensity::PerTrap, 100_000);
        let label = kind.as_str();
        lines.push(format!("    {label} (per-trap): {}", describe_n(&s)));
        let n = col(&s, "N");
        near(&mut lines, &mut pass, &format!("{label} E(N|Y)"), n.mean, mean, 0.5);
        near(&mut lines, &mut pass, &format!("{label} N 2.5%"), n.q025, lo, 1.0);
        near(&mut lines, &mut pass, &format!("{label} N 97.5%"), n.q975, hi, 1.0);
        let curve = scr_detection_curve(&fit.posterior, &[0.0, 100.0]).unwrap();
        let power = scr_power_to_detect(&fit.posterior, &data, &mut rng_stream(2020, tag::PREDICTIVE)).unwrap();
        if kind == NModelKind::PoissonBinomial {
            near(&mut lines, &mut pass, "detection at 0 m", curve[0].mean, 0.07, 0.01);
            near(&mut lines, &mut pass, "detection at 100 m", curve[1].mean, 0.027, 0.005);
            near(&mut lines, &mut pass, "power to detect", power, 0.81, 0.03);
        } else {
            lines.push(format!(
                "    poisson detection at 0 / 100 m: {:.4} / {:.4}; power {power:.3}",
                curve[0].mean, curve[1].mean
            ));
        }
        check(&mut lines, &mut pass, secs < budget, format!("{label} runtime {secs:.0}s < {budget:.0}s"));
    }
    let (_, shared, _) = hare_fit(NModelKind::PoissonBinomial, ScrIntensity::Shared, 20_000);
    lines.push(format!("    info: poisbinom with shared membership (K=2e4): {}", describe_n(&shared)));
    Outcome { pass, detail: lines.join("\n    ") }
}

fn criterion_5() -> Outcome {
    let (mut lines, mut pass) = (Vec::new(), true);
    let mut rng = rng_stream(5, tag::ORACLE);

    let mut worst: f64 = 0.0;
    for m in 0..=12usize {
        let probs: Vec<f64> = (0..m).map(|_| rng.uniform()).collect();
        let pv = ProbVector::new(probs.clone()).unwrap();
        let mut exact = vec![0.0; m + 1];
        for mask in 0u32..(1 << m) {
            let mut w = 1.0;
            for (i, p) in probs.iter().enumerate() {
                w *= if mask >> i & 1 == 1 { *p } else { 1.0 - p };
            }
            exact[mask.count_ones() as usize] += w;
        }
        for (k, e) in exact.iter().enumerate() {
            worst = worst.max((poisbinom_logpmf(k, &pv).exp() - e).abs());
        }
    }
    check(&mut lines, &mut pass, worst < 1e-12, format!("DP vs 2^M enumeration, M <= 12: max |diff| {worst:.2e} < 1e-12"));

    let p = 0.173;
    let pv = ProbVector::new(vec![p; 1500]).unwrap();
    let worst = (0..=1500u64)
        .map(|k| (poisbinom_logpmf(k as usize, &pv).exp() - binom_logpmf(k, 1500, p).unwrap().exp()).abs())
        .fold(0.0, f64::max);
    check(&mut lines, &mut pass, worst < 1e-10, format!("DP vs Binomial(1500, {p}): max |diff| {worst:.2e} < 1e-10"));

    let mut worst: f64 = 0.0;
    for j in 1..=20u64 {
        for &p in &[1e-6, 0.01, 0.1, 0.37, 0.5, 0.9, 0.999] {
            let total: f64 = (1..=j).map(|y| ztbinom_logpmf(y, j, p).unwrap().exp()).sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    check(&mut lines, &mut pass, worst < 1e-12, format!("zero-truncated binomial sums to 1, J <= 20: max |err| {worst:.2e} < 1e-12"));
    Outcome { pass, detail: lines.join("\n    ") }
}

fn criterion_6() -> Outcome {
    let (mut lines, mut pass) = (Vec::new(), true);
    let weights = [0.1, 0.3, 0.05, 0.35, 0.2];
    // An arbitrary offset: only ratios matter.
    let table = LookupTable::new(weights.iter().map(|w: &f64| w.ln() - 40.0).collect()).unwrap();
    let iterations = 1_000_000;
    let (visited, accepted) = pprb_indices(&table, iterations, &mut rng_stream(6, tag::STAGE2)).unwrap();
    let mut counts = [0usize; 5];
    visited.iter().for_each(|&i| counts[i] += 1);
    let tv = 0.5 * counts.iter().zip(weights).map(|(&c, w)| (c as f64 / iterations as f64 - w).abs()).sum::<f64>();
    lines.push(format!("    occupancy {:?}, acceptance {:.3}", counts.map(|c| c as f64 / iterations as f64), accepted as f64 / iterations as f64));
    check(&mut lines, &mut pass, tv < 0.01, format!("total variation {tv:.5} < 0.01"));
    Outcome { pass, detail: lines.join("\n    ") }
}

fn files_equal(a: &std::path::Path, b: &std::path::Path, stem: &str) -> bool {
    let read = |d: &std::path::Path, ext: &str| std::fs::read(d.join(format!("{stem}.{ext}"))).unwrap();
    read(a, "csv") == read(b, "csv") && read(a, "meta.json") == read(b, "meta.json")
}

fn criterion_7() -> Outcome {
    let (mut lines, mut pass) = (Vec::new(), true);
    let root = tempfile::tempdir().unwrap();
    type Runner = Box<dyn Fn(usize) -> PprbFit>;
    let runners: Vec<(&str, Runner)> = vec![
        ("m0", Box::new(|w| {
            let mut c = FitConfig::new(NModelSpec::new(NModelKind::Binomial, 100));
            (c.k1, c.k2, c.workers, c.seed) = (5000, 5000, w, 77);
            fit_m0(&builtin_simulated_m0(), &M0Priors::default(), &c).unwrap()
        })),
        ("mh", Box::new(|w| {
            let mut c = FitConfig::new(NModelSpec::new(NModelKind::Poisson, 600));
            (c.k1, c.k2, c.workers, c.seed, c.mc_draws_n, c.mc_draws_psibar) = (800, 800, w, 77, Some(50), 100);
            fit_mh(&builtin_salamander(), &MhPriors::default(), &c).unwrap()
        })),
        ("scr", Box::new(|w| {
            let mut c = FitConfig::new(NModelSpec::new(NModelKind::PoissonBinomial, 50));
            (c.k1, c.k2, c.workers, c.seed, c.mc_draws_n, c.mc_draws_psibar) = (400, 400, w, 77, Some(20), 50);
            fit_scr(&builtin_hare(), &ScrPriors::default(), ScrIntensity::PerTrap, &c).unwrap()
        })),
    ];
    for (name, run) in runners {
        let dirs: Vec<_> = [1usize, 2, 4, 1]
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let fit = run(w);
                let dir = root.path().join(format!("{name}-{i}-w{w}"));
                std::fs::create_dir_all(&dir).unwrap();
                write_chain(&dir, "stage1", &fit.stage1).unwrap();
                write_chain(&dir, "stage2", &fit.stage2).unwrap();
                write_chain(&dir, "stage3", &fit.posterior).unwrap();
                std::fs::write(dir.join("lookup.csv"), fit.table.to_csv_string()).unwrap();
                dir
            })
            .collect();
        let same = dirs[1..].iter().all(|d| {
            ["stage1", "stage2", "stage3"].iter().all(|s| files_equal(&dirs[0], d, s))
                && std::fs::read(dirs[0].join("lookup.csv")).unwrap() == std::fs::read(d.join("lookup.csv")).unwrap()
        });
        let readable = read_chain(&dirs[0], "stage3").is_ok();
        check(&mut lines, &mut pass, same && readable, format!("{name}: chain and lookup files byte-identical for workers 1, 2, 4 and a rerun"));
    }
    Outcome { pass, detail: lines.join("\n    ") }
}

/// Posterior CDF of the common logit detection probability under the
/// zero-truncated likelihood and a normal prior, by quadrature on a grid.
fn grid_cdf(data: &CaptureHistory, prior_mean: f64, prior_var: f64) -> impl Fn(f64) -> f64 {
    let j = data.occasions() as f64;
    let (lo, hi, steps) = (-8.0, 4.0, 24_000);
    let h = (hi - lo) / steps as f64;
    let logpost: Vec<f64> = (0..=steps)
        .map(|i| {
            let eta = lo + h * i as f64;
            let sp = softplus(eta);
            let lik: f64 = data
                .counts()
                .iter()
                .map(|&y| y as f64 * eta - j * sp - (-(-j * sp).exp_m1()).ln())
                .sum();
            lik + normal_logpdf(eta, prior_mean, prior_var)
        })
        .collect();
    let top = logpost.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dens: Vec<f64> = logpost.iter().map(|v| (v - top).exp()).collect();
    let mut cdf = vec![0.0; dens.len()];
    for i in 1..dens.len() {
        cdf[i] = cdf[i - 1] + 0.5 * h * (dens[i - 1] + dens[i]);
    }
    let total = cdf[cdf.len() - 1];
    move |x: f64| {
        let t = ((x - lo) / h).clamp(0.0, steps as f64);
        let i = (t.floor() as usize).min(steps - 1);
        (cdf[i] + (t - i as f64) * (cdf[i + 1] - cdf[i])) / total
    }
}

fn criterion_8() -> Outcome {
    let (mut lines, mut pass) = (Vec::new(), true);

    // n-pmf of Mh with no heterogeneity equals the M0 n-pmf.
    let mut rng = rng_stream(8, tag::ORACLE);
    let mut worst: f64 = 0.0;
    for &(p, psi) in &[(0.15, 0.3), (0.3, 0.5), (0.6, 0.1)] {
        for n in [5u64, 20, 60] {
            let mh = MhParams { logit_p: vec![recap::dist::special::logit(p); n as usize], mu: recap::dist::special::logit(p), sigma2: 1e-12, psi };
            for (kind, m0_kind) in [(NModelKind::Poisson, NModelKind::Poisson), (NModelKind::PoissonBinomial, NModelKind::Binomial)] {
                let a = mh_n_logpmf_mc(&mh, n, NModelSpec::new(kind, 200), 4, 10, &mut rng).unwrap();
                let b = m0_n_logpmf(M0Params { p, psi }, n, NModelSpec::new(m0_kind, 200), 4);
                worst = worst.max((a.exp() - b.exp()).abs());
            }
        }
    }
    check(&mut lines, &mut pass, worst < 1e-3, format!("Mh (sigma2 = 1e-12) n-pmf vs M0: max |diff| {worst:.2e} < 1e-3"));

    // Stage-1 posterior of mu with sigma2 held near zero vs the homogeneous grid posterior.
    let data = builtin_salamander();
    let priors = MhPriors::default();
    let model = MhModel::new(data.clone(), priors).unwrap().with_fixed_sigma2(1e-6).unwrap();
    let mut config = FitConfig::new(NModelSpec::new(NModelKind::Poisson, 1500));
    (config.k1, config.k2, config.seed, config.mc_draws_n, config.mc_draws_psibar) = (60_000, 10, 8, Some(1), 1);
    config.lookup = LookupScope::Proposed;
    let fit = fit_mh_with(model, &config).unwrap();
    let cdf = grid_cdf(&data, priors.mu_mean, priors.mu_var);
    for name in ["mu", "logit_p_1"] {
        let ks = ks_one_sample(fit.stage1.column(name).unwrap(), &cdf);
        check(&mut lines, &mut pass, ks < 0.05, format!("KS({name}, grid posterior) = {ks:.4} < 0.05"));
    }

    // One trap and a point region: every individual sits at the trap.
    let site = [120.0, -35.0];
    let region = Region::new(site[0], site[0], site[1], site[1]).unwrap();
    let mut worst: f64 = 0.0;
    for &(b0, psi) in &[(-2.0, 0.2), (-0.3, 0.5), (1.0, 0.9)] {
        for n in [4u64, 10, 30] {
            let rows = (0..n).map(|i| vec![1 + (i % 5) as u32]).collect();
            let scr = ScrData::new(vec![site], rows, 5, region).unwrap();
            let params = ScrParams { centers: vec![site; n as usize], beta0: b0, beta1: -3e-4, psi };
            for (kind, m0_kind) in [(NModelKind::Poisson, NModelKind::Poisson), (NModelKind::PoissonBinomial, NModelKind::Binomial)] {
                for intensity in [ScrIntensity::PerTrap, ScrIntensity::Shared] {
                    let a = scr_n_logpmf_mc(&params, n, NModelSpec::new(kind, 50), intensity, &scr, 10, &mut rng).unwrap();
                    let b = m0_n_logpmf(M0Params { p: logistic(b0), psi }, n, NModelSpec::new(m0_kind, 50), 5);
                    worst = worst.max((a.exp() - b.exp()).abs());
                }
            }
        }
    }
    check(&mut lines, &mut pass, worst < 1e-3, format!("SCR (L = 1, point region) n-pmf vs M0: max |diff| {worst:.2e} < 1e-3"));
    Outcome { pass, detail: lines.join("\n    ") }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: &[Criterion] = &[
    (1, "staged fit reproduces the single-stage sampler (M0)", criterion_1),
    (2, "salamander Mh, Poisson n-model", criterion_2),
    (3, "salamander Mh, Poisson-binomial n-model (K = 2e4)", criterion_3),
    (4, "hare SCR, both n-models", criterion_4),
    (5, "distribution oracles", criterion_5),
    (6, "stage-2 stationarity on a 5-entry table", criterion_6),
    (7, "determinism across worker counts", criterion_7),
    (8, "degenerate cases reduce to M0", criterion_8),
];

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {id}: {status} - {name} [{:.1}s]\n    {}", start.elapsed().as_secs_f64(), out.detail);
        failed += usize::from(!out.pass);
    }
    println!("failed criteria: {failed}");
    let strict = std::env::var("RECAP_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed > 0 && strict { ExitCode::FAILURE } else { ExitCode::SUCCESS }
}
