use std::path::PathBuf;

use clap::Args;

use recap::engine::summary::{density_grid, pmf};
use recap::engine::{read_chain, summarize};
use recap::models::scr::{detection_curve_csv, scr_detection_curve};

use crate::error::{CliError, CliResult};
use crate::fit::{detection_grid, is_latent};

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Output directory of a `fit` run.
    #[arg(long)]
    pub run: PathBuf,
    /// Write plot data under `<run>/plots`.
    #[arg(long)]
    pub emit_plots: bool,
}

const DENSITY_POINTS: usize = 200;

pub fn run(args: &SummarizeArgs) -> CliResult {
    if !args.run.is_dir() {
        return Err(recap::Error::Data(format!("run directory {} does not exist", args.run.display())).into());
    }
    let chain = read_chain(&args.run, "stage3")?;
    let summary = summarize(&chain);
    println!("{} posterior, {} draws", summary.model, summary.draws);
    println!("{:<10} {:>12} {:>12} {:>12} {:>12} {:>12} {:>10}", "param", "mean", "sd", "2.5%", "50%", "97.5%", "ess");
    for c in summary.columns.iter().filter(|c| !is_latent(&c.name)) {
        let ess = c.ess.map_or("-".to_string(), |e| format!("{e:.0}"));
        println!(
            "{:<10} {:>12.5} {:>12.5} {:>12.5} {:>12.5} {:>12.5} {:>10}",
            c.name, c.mean, c.sd, c.q025, c.q50, c.q975, ess
        );
    }
    if !args.emit_plots {
        return Ok(());
    }

    let plots = args.run.join("plots");
    std::fs::create_dir_all(&plots)?;
    for (name, x) in chain.columns().filter(|(n, _)| !is_latent(n) && *n != "draw") {
        let mut csv = format!("{name},density\n");
        for (v, d) in density_grid(x, DENSITY_POINTS) {
            csv.push_str(&format!("{v},{d}\n"));
        }
        std::fs::write(plots.join(format!("density_{name}.csv")), csv)?;
    }
    let n = chain.require("N")?;
    let mut csv = String::from("N,probability\n");
    for e in pmf(n) {
        csv.push_str(&format!("{},{}\n", e.value, e.probability));
    }
    std::fs::write(plots.join("n_pmf.csv"), csv)?;

    if summary.model == recap::models::scr::MODEL_ID {
        let text = std::fs::read_to_string(args.run.join("summary.json"))?;
        let json: serde_json::Value = serde_json::from_str(&text)?;
        let max_d = json["detection"]["max_trap_distance_m"]
            .as_f64()
            .ok_or_else(|| CliError::Core(recap::Error::Data("summary.json lacks the trap distance".into())))?;
        let curve = scr_detection_curve(&chain, &detection_grid(max_d))?;
        std::fs::write(plots.join("detection_curve.csv"), detection_curve_csv(&curve))?;
    }
    eprintln!("plot data written to {}", plots.display());
    Ok(())
}
