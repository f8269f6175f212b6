mod commands;
mod error;
mod files;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, CliResult};

/// Approximate Bayesian computation experiments for state space models.
#[derive(Debug, Parser)]
#[command(name = "ssm-abc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the observed series: observed.csv and meta.json.
    Simulate(Common),
    /// Fit the auxiliary model to the observed series: fit.json.
    Fit(Common),
    /// One ABC pass per method, scored against the exact posterior.
    #[command(alias = "abc-run")]
    Run(Common),
    /// Exact (and, for Heston, AUKF and Euler) posterior marginals.
    ExactPosterior(Common),
    /// Score existing draws_<method>.csv files against posterior_exact_<param>.csv.
    Evaluate(Common),
    /// Repeated ABC runs on one observed series.
    Replicate {
        #[command(flatten)]
        common: Common,
        /// Number of runs; defaults to `runs` in the config.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Heston accuracy table over the configured panels.
    Table1(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Read the observed series from this CSV instead of simulating it.
    #[arg(long)]
    observed: Option<PathBuf>,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate(c) => commands::simulate(&commands::Context::new(&c)?),
        Command::Fit(c) => commands::fit(&commands::Context::new(&c)?),
        Command::Run(c) => commands::run(&commands::Context::new(&c)?, Some(1)),
        Command::ExactPosterior(c) => commands::exact_posterior(&commands::Context::new(&c)?),
        Command::Evaluate(c) => commands::evaluate(&commands::Context::new(&c)?),
        Command::Replicate { common, runs } => {
            if runs == Some(0) {
                return Err(CliError::Config("--runs must be at least 1".into()));
            }
            commands::run(&commands::Context::new(&common)?, runs)
        }
        Command::Table1(c) => commands::table1(&commands::Context::new(&c)?),
    }
}
