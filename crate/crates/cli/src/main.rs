//! `recap`: simulate, fit and summarize capture-recapture data.

mod error;
mod fit;
mod settings;
mod simulate;
mod summarize;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "recap", version, about = "Recursive Bayesian capture-recapture")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a dataset from a known population.
    Simulate(simulate::SimulateArgs),
    /// Fit a model with the staged sampler.
    Fit(Box<fit::FitArgs>),
    /// Print posterior summaries of a fit and optionally write plot data.
    Summarize(summarize::SummarizeArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(error::EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate::run(&args),
        Command::Fit(args) => fit::run(&args),
        Command::Summarize(args) => summarize::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
