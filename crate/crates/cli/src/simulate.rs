use std::path::PathBuf;

use clap::{Args, ValueEnum};

use recap::data::{load_traps_csv, simulate_m0, simulate_scr, Region, DEFAULT_BUFFER_M};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimModel {
    M0,
    Scr,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: SimModel,
    /// Superpopulation size.
    #[arg(long = "M")]
    pub superpop: usize,
    #[arg(long)]
    pub psi: f64,
    /// Detection probability (m0).
    #[arg(long)]
    pub p: Option<f64>,
    /// Sampling occasions.
    #[arg(long = "J")]
    pub occasions: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta1: Option<f64>,
    /// Trap CSV with header `trap_id,x,y` (scr).
    #[arg(long)]
    pub traps_file: Option<PathBuf>,
    /// Activity-center support as `x0,x1,y0,y1`; defaults to the trap box plus 100 m.
    #[arg(long, allow_hyphen_values = true)]
    pub region: Option<String>,
    /// Output directory for `data.csv` and `truth.json`.
    #[arg(long, default_value = "recap-sim")]
    pub out: PathBuf,
}

pub fn parse_region(text: &str) -> CliResult<Region> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("--region `{text}` is not four numbers")))?;
    if v.len() != 4 {
        return Err(CliError::usage(format!("--region `{text}` needs x0,x1,y0,y1")));
    }
    Ok(Region::new(v[0], v[1], v[2], v[3])?)
}

pub fn run(args: &SimulateArgs) -> CliResult {
    let (csv, truth) = match args.model {
        SimModel::M0 => {
            if args.beta0.is_some() || args.beta1.is_some() || args.traps_file.is_some() || args.region.is_some() {
                return Err(CliError::usage("--beta0, --beta1, --traps-file and --region apply to --model scr"));
            }
            let p = args.p.ok_or_else(|| CliError::usage("--model m0 requires --p"))?;
            let (data, truth) = simulate_m0(args.superpop, args.psi, p, args.occasions, args.seed)?;
            (data.to_csv_string(), truth)
        }
        SimModel::Scr => {
            if args.p.is_some() {
                return Err(CliError::usage("--p applies to --model m0; use --beta0/--beta1"));
            }
            let (Some(beta0), Some(beta1), Some(traps_file)) = (args.beta0, args.beta1, &args.traps_file) else {
                return Err(CliError::usage("--model scr requires --beta0, --beta1 and --traps-file"));
            };
            let (_, traps) = load_traps_csv(traps_file)?;
            let region = match &args.region {
                Some(r) => parse_region(r)?,
                None => Region::around(&traps, DEFAULT_BUFFER_M)?,
            };
            let (data, truth) =
                simulate_scr(args.superpop, args.psi, beta0, beta1, &traps, region, args.occasions, args.seed)?;
            (data.to_csv_string(), truth)
        }
    };
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("data.csv"), csv)?;
    std::fs::write(args.out.join("truth.json"), serde_json::to_string_pretty(&truth)? + "\n")?;
    eprintln!(
        "simulated N = {}, n = {} -> {}",
        truth.abundance,
        truth.observed,
        args.out.join("data.csv").display()
    );
    Ok(())
}
