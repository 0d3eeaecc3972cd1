//! `modsel`: model-selection runs and Monte Carlo experiments from a TOML
//! configuration file.

mod commands;
mod config;
mod exit;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "modsel", version, about = "Model selection by cross-validation, information criteria and pseudo-out-of-sample forecasts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every candidate on one dataset and pick the minimiser per criterion
    Select(Flags),
    /// Monte Carlo experiment: per-replication rows, summary and selection counts
    Simulate(Flags),
    /// Optimality-ratio and cross-term convergence table over the T grid
    Convergence(Flags),
}

#[derive(Args)]
struct Flags {
    /// Configuration file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the base seed (or the DGP seed for `select`)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on it
    #[arg(long)]
    threads: Option<usize>,
    /// Reuse complete replications from an existing replications.csv
    #[arg(long)]
    resume: bool,
}

type Handler = fn(&commands::RunArgs) -> Result<(), exit::Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, flags, run): (&'static str, Flags, Handler) = match cli.command {
        Command::Select(f) => ("select", f, commands::select),
        Command::Simulate(f) => ("simulate", f, commands::simulate),
        Command::Convergence(f) => ("convergence", f, commands::convergence),
    };
    let args = commands::RunArgs {
        command: name,
        config: flags.config,
        out: flags.out,
        seed: flags.seed,
        threads: flags.threads,
        resume: flags.resume,
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("modsel {name}: {f}");
            ExitCode::from(f.code)
        }
    }
}
