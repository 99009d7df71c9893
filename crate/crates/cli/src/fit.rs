use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use recap::data::{
    builtin_hare, builtin_salamander, builtin_simulated_m0, load_capture_csv, load_scr_csv, sq_dist,
    CaptureHistory, ScrData,
};
use recap::dist::{rng_stream, tag};
use recap::engine::{
    default_workers, sha256_hex, summarize, write_chain, Chain, ChainSummary, FitConfig, LookupScope, NModelKind,
    NModelSpec, PprbFit, StageTimings,
};
use recap::models::{m0, mh, scr};

use crate::error::{CliError, CliResult};
use crate::settings::{apply_numeric, ConfigFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    M0,
    Mh,
    Scr,
}

impl FitModel {
    fn default_nmodel(self) -> NModelKind {
        match self {
            FitModel::M0 => NModelKind::Binomial,
            FitModel::Mh => NModelKind::Poisson,
            FitModel::Scr => NModelKind::PoissonBinomial,
        }
    }

    fn default_superpop(self) -> usize {
        match self {
            FitModel::M0 => 100,
            FitModel::Mh => 1500,
            FitModel::Scr => scr::DEFAULT_SUPERPOP,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub model: FitModel,
    /// binomial, poisbinom or poisson.
    #[arg(long)]
    pub nmodel: Option<String>,
    /// A CSV path or `builtin:salamander`, `builtin:hare`, `builtin:simulated-m0`.
    #[arg(long)]
    pub data: String,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "recap-run")]
    pub out: PathBuf,
    /// Also run the single-stage sampler (m0 only).
    #[arg(long)]
    pub oracle: bool,
    /// Occasions, for capture files without a `# J=` line.
    #[arg(long = "J")]
    pub occasions: Option<u32>,
    /// Superpopulation size.
    #[arg(long = "M")]
    pub superpop: Option<usize>,
    #[arg(long = "K1")]
    pub k1: Option<usize>,
    #[arg(long = "K2")]
    pub k2: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<f64>,
    #[arg(long)]
    pub mc_draws_n: Option<usize>,
    #[arg(long)]
    pub mc_draws_psibar: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "RECAP_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long)]
    pub no_adapt: bool,
    /// `all` or `proposed`: which stage-1 draws get an n-pmf evaluation.
    #[arg(long)]
    pub lookup: Option<String>,
    /// SCR only: `per-trap` or `shared`.
    #[arg(long)]
    pub intensity: Option<String>,
}

enum Dataset {
    Capture(CaptureHistory),
    Spatial(ScrData),
}

impl Dataset {
    fn n(&self) -> usize {
        match self {
            Dataset::Capture(d) => d.n(),
            Dataset::Spatial(d) => d.n(),
        }
    }

    fn occasions(&self) -> u32 {
        match self {
            Dataset::Capture(d) => d.occasions(),
            Dataset::Spatial(d) => d.occasions(),
        }
    }
}

fn load_dataset(spec: &str, model: FitModel, occasions: Option<u32>) -> CliResult<(Dataset, String)> {
    let data = match spec.strip_prefix("builtin:") {
        Some("salamander") => Dataset::Capture(builtin_salamander()),
        Some("simulated-m0") => Dataset::Capture(builtin_simulated_m0()),
        Some("hare") => Dataset::Spatial(builtin_hare()),
        Some(other) => return Err(CliError::usage(format!("unknown builtin dataset `{other}`"))),
        None if model == FitModel::Scr => Dataset::Spatial(load_scr_csv(spec)?),
        None => Dataset::Capture(load_capture_csv(spec, occasions)?),
    };
    if spec.starts_with("builtin:") {
        if let Some(j) = occasions {
            if j != data.occasions() {
                return Err(recap::Error::Data(format!("{spec} has J={} but --J {j} was given", data.occasions())).into());
            }
        }
    }
    let bytes = match (&data, spec.starts_with("builtin:")) {
        (_, false) => std::fs::read(spec)?,
        (Dataset::Capture(d), true) => d.to_csv_string().into_bytes(),
        (Dataset::Spatial(d), true) => d.to_csv_string().into_bytes(),
    };
    match (&data, model) {
        (Dataset::Spatial(_), FitModel::M0 | FitModel::Mh) => {
            Err(recap::Error::Data(format!("{spec} is spatial data; use --model scr")).into())
        }
        (Dataset::Capture(_), FitModel::Scr) => {
            Err(recap::Error::Data(format!("{spec} has no trap layout; --model scr needs spatial data")).into())
        }
        _ => Ok((data, sha256_hex(&bytes))),
    }
}

/// Everything that determines a fit, after merging the config file and flags.
#[derive(Debug, Clone, Serialize)]
struct Settings {
    model: FitModel,
    data: String,
    config: FitConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    intensity: Option<scr::ScrIntensity>,
    priors: serde_json::Value,
    oracle: bool,
}

fn parse_flag<T: std::str::FromStr<Err = recap::Error>>(flag: &str, v: &str) -> CliResult<T> {
    v.parse().map_err(|e: recap::Error| CliError::usage(format!("--{flag}: {e}")))
}

fn resolve(args: &FitArgs) -> CliResult<(Settings, ConfigFile)> {
    let mut file = match &args.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let file_nmodel: Option<String> = file.take("nmodel")?;
    let mut kind = match args.nmodel.as_deref().or(file_nmodel.as_deref()) {
        Some(s) => parse_flag::<NModelKind>("nmodel", s)?,
        None => args.model.default_nmodel(),
    };
    match (args.model, kind) {
        (FitModel::M0, NModelKind::PoissonBinomial) => {
            eprintln!("warning: under m0 every individual shares one detection probability; poisbinom is binomial");
            kind = NModelKind::Binomial;
        }
        (FitModel::Mh | FitModel::Scr, NModelKind::Binomial) => {
            return Err(CliError::usage("the binomial n-model needs a common detection probability; use --model m0"));
        }
        _ => {}
    }
    let superpop = args.superpop.or(file.take("m")?).unwrap_or(args.model.default_superpop());
    let mut config = FitConfig::new(NModelSpec::new(kind, superpop));
    macro_rules! merge {
        ($field:ident, $key:literal) => {
            if let Some(v) = args.$field.or(file.take($key)?) {
                config.$field = v;
            }
        };
    }
    merge!(k1, "k1");
    merge!(k2, "k2");
    merge!(burn_in, "burn_in");
    merge!(mc_draws_psibar, "mc_draws_psibar");
    merge!(seed, "seed");
    config.mc_draws_n = args.mc_draws_n.or(file.take("mc_draws_n")?);
    config.workers = args.workers.or(file.take("workers")?).unwrap_or_else(default_workers);
    let file_adapt: Option<bool> = file.take("adapt")?;
    config.adapt = !args.no_adapt && file_adapt.unwrap_or(true);
    let file_lookup: Option<String> = file.take("lookup")?;
    if let Some(s) = args.lookup.as_deref().or(file_lookup.as_deref()) {
        config.lookup = parse_flag::<LookupScope>("lookup", s)?;
    }
    for (group, raw, line) in file.take_prefixed("scale.") {
        let v: f64 = raw.parse().map_err(|_| {
            CliError::Core(recap::Error::Parse {
                path: file.source().into(),
                line: line as u64,
                msg: format!("`{raw}` is not a number"),
            })
        })?;
        config.proposal_scales.insert(group, v);
    }

    let file_intensity: Option<String> = file.take("intensity")?;
    let intensity = match (args.model, args.intensity.as_deref().or(file_intensity.as_deref())) {
        (FitModel::Scr, Some(s)) => Some(parse_flag::<scr::ScrIntensity>("intensity", s)?),
        (FitModel::Scr, None) => Some(scr::ScrIntensity::PerTrap),
        (_, Some(_)) => return Err(CliError::usage("--intensity applies to --model scr")),
        (_, None) => None,
    };
    if args.oracle && args.model != FitModel::M0 {
        return Err(CliError::usage("--oracle is available for --model m0 only"));
    }
    let overrides = file.take_prefixed("prior.");
    let source = file.source().to_string();
    let priors = match args.model {
        FitModel::M0 => serde_json::to_value(apply_numeric(&m0::M0Priors::default(), &overrides, &source)?)?,
        FitModel::Mh => serde_json::to_value(apply_numeric(&mh::MhPriors::default(), &overrides, &source)?)?,
        FitModel::Scr => serde_json::to_value(apply_numeric(&scr::ScrPriors::default(), &overrides, &source)?)?,
    };
    config.validate()?;
    let settings = Settings { model: args.model, data: args.data.clone(), config, intensity, priors, oracle: args.oracle };
    Ok((settings, file))
}

#[derive(Debug, Serialize)]
struct DetectionSummary {
    max_trap_distance_m: f64,
    curve: Vec<scr::DetectionPoint>,
}

#[derive(Debug, Serialize)]
struct FitSummary {
    model: FitModel,
    n_model: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    intensity: Option<&'static str>,
    superpop: usize,
    observed: usize,
    occasions: u32,
    stage1_acceptance: BTreeMap<String, recap::engine::AcceptanceStat>,
    stage2_acceptance: BTreeMap<String, recap::engine::AcceptanceStat>,
    lookup_evaluated: usize,
    power_to_detect: f64,
    posterior: ChainSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    detection: Option<DetectionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<ChainSummary>,
}

#[derive(Debug, Serialize)]
struct OutputFile {
    path: String,
    sha256: String,
}

/// Base seed and the stream tag each stage mixes into it.
#[derive(Debug, Serialize)]
struct Seeds {
    base: u64,
    streams: BTreeMap<&'static str, u64>,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    version: &'static str,
    settings: Settings,
    dataset_sha256: String,
    seeds: Seeds,
    timings: StageTimings,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_seconds: Option<f64>,
    outputs: Vec<OutputFile>,
}

/// Drops per-individual latent columns from a printed or saved summary.
pub fn is_latent(name: &str) -> bool {
    name.starts_with("logit_p_") || name.starts_with("s_")
}

fn posterior_summary(chain: &Chain) -> ChainSummary {
    let mut s = summarize(chain);
    s.columns.retain(|c| !is_latent(&c.name));
    s
}

fn max_trap_distance(data: &ScrData) -> f64 {
    let t = data.traps();
    let mut best: f64 = 0.0;
    for (i, &a) in t.iter().enumerate() {
        for &b in &t[i + 1..] {
            best = best.max(sq_dist(a, b));
        }
    }
    best.sqrt()
}

pub fn detection_grid(max_distance: f64) -> Vec<f64> {
    let steps = 100;
    (0..=steps).map(|i| max_distance * i as f64 / steps as f64).collect()
}

fn write_file(out: &Path, name: &str, bytes: &[u8], outputs: &mut Vec<PathBuf>) -> CliResult {
    let path = out.join(name);
    std::fs::write(&path, bytes)?;
    outputs.push(path);
    Ok(())
}

pub fn run(args: &FitArgs) -> CliResult {
    let (settings, file) = resolve(args)?;
    file.finish()?;
    let (data, fingerprint) = load_dataset(&args.data, args.model, args.occasions)?;
    let config = &settings.config;
    config.n_model.check_against(data.n())?;
    let mut predictive = rng_stream(config.seed, tag::PREDICTIVE);
    let j = data.occasions();

    let started = std::time::Instant::now();
    let (fit, power, detection, oracle_chain): (PprbFit, f64, Option<DetectionSummary>, Option<Chain>) =
        match (&data, settings.model) {
            (Dataset::Capture(d), FitModel::M0) => {
                let priors: m0::M0Priors = serde_json::from_value(settings.priors.clone())?;
                let fit = m0::fit_m0(d, &priors, config)?;
                let power = m0::m0_power_to_detect(&fit.posterior, j)?;
                let oracle =
                    if settings.oracle { Some(m0::m0_single_stage_fit(d, &priors, config.n_model, config)?) } else { None };
                (fit, power, None, oracle)
            }
            (Dataset::Capture(d), FitModel::Mh) => {
                let priors: mh::MhPriors = serde_json::from_value(settings.priors.clone())?;
                let fit = mh::fit_mh(d, &priors, config)?;
                let power = mh::mh_power_to_detect(&fit.posterior, j, &mut predictive)?;
                (fit, power, None, None)
            }
            (Dataset::Spatial(d), FitModel::Scr) => {
                let priors: scr::ScrPriors = serde_json::from_value(settings.priors.clone())?;
                let intensity = settings.intensity.expect("set for scr");
                let fit = scr::fit_scr(d, &priors, intensity, config)?;
                let power = scr::scr_power_to_detect(&fit.posterior, d, &mut predictive)?;
                let max_d = max_trap_distance(d);
                let curve = scr::scr_detection_curve(&fit.posterior, &detection_grid(max_d))?;
                (fit, power, Some(DetectionSummary { max_trap_distance_m: max_d, curve }), None)
            }
            _ => unreachable!("load_dataset checks model and data agree"),
        };
    let elapsed = started.elapsed().as_secs_f64();
    let t = &fit.timings;
    let oracle_seconds = oracle_chain.as_ref().map(|_| elapsed - t.stage1 - t.lookup - t.stage2 - t.stage3);

    let out = &args.out;
    std::fs::create_dir_all(out)?;
    let mut outputs = Vec::new();
    outputs.extend(write_chain(out, "stage1", &fit.stage1)?);
    outputs.extend(write_chain(out, "stage2", &fit.stage2)?);
    outputs.extend(write_chain(out, "stage3", &fit.posterior)?);
    if let Some(chain) = &oracle_chain {
        outputs.extend(write_chain(out, "oracle", chain)?);
    }
    write_file(out, "lookup.csv", fit.table.to_csv_string().as_bytes(), &mut outputs)?;

    let summary = FitSummary {
        model: settings.model,
        n_model: config.n_model.kind.as_str(),
        intensity: settings.intensity.map(|i| i.as_str()),
        superpop: config.n_model.superpop,
        observed: data.n(),
        occasions: j,
        stage1_acceptance: fit.stage1.meta().acceptance.clone(),
        stage2_acceptance: fit.stage2.meta().acceptance.clone(),
        lookup_evaluated: fit.table.evaluated().count(),
        power_to_detect: power,
        posterior: posterior_summary(&fit.posterior),
        detection,
        oracle: oracle_chain.as_ref().map(posterior_summary),
    };
    write_file(out, "summary.json", (serde_json::to_string_pretty(&summary)? + "\n").as_bytes(), &mut outputs)?;

    let mut files = Vec::with_capacity(outputs.len());
    for p in &outputs {
        let name = p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        files.push(OutputFile { path: name, sha256: sha256_hex(&std::fs::read(p)?) });
    }
    let seed = config.seed;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        seeds: Seeds {
            base: seed,
            streams: BTreeMap::from([
                ("stage1", tag::STAGE1),
                ("lookup", tag::LOOKUP),
                ("stage2", tag::STAGE2),
                ("stage3", tag::STAGE3),
                ("predictive", tag::PREDICTIVE),
                ("oracle", tag::ORACLE),
            ]),
        },
        settings,
        dataset_sha256: fingerprint,
        timings: fit.timings.clone(),
        oracle_seconds,
        outputs: files,
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;

    let n = summary.posterior.column("N").expect("posterior has N");
    println!(
        "E(N) = {:.2}, 95% CI [{}, {}], power to detect {:.3}; wrote {}",
        n.mean,
        n.q025,
        n.q975,
        power,
        out.display()
    );
    if let Some(o) = summary.oracle.as_ref().and_then(|s| s.column("N")) {
        println!("single-stage E(N) = {:.2}, 95% CI [{}, {}]", o.mean, o.q025, o.q975);
    }
    Ok(())
}
