//! Batch runner for the broadcasting experiments.
//!
//! Exit codes: 0 success, 2 config error, 3 invariant violation, 4 domain error.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "semibroadcast",
    version,
    about = "Semiclassical broadcasting experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed, overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for results.json and results.csv.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print entropies in bits (files stay in nats).
    #[arg(long, global = true)]
    bits: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// C_max of n-qubit memories over n and beta*omega.
    CmaxSweep,
    /// Entropy production against chi + beta dF over thermal instances.
    HlBound,
    /// Ideal-broadcasting defect of N memories and the entropy witness.
    Nogo,
    /// Recover p from the cycled memory variants.
    Reconstruct,
    /// Information-relation class of one interaction.
    Classify,
}

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("SEMIBROADCAST_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        CliError::Config(format!(
            "SEMIBROADCAST_THREADS = {v:?} is not a positive integer"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    let cfg = ExperimentConfig::load(cli.config.as_deref())?;
    let ctx = Context {
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        out: cli
            .out
            .clone()
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
        bits: cli.bits,
        cfg,
    };
    match cli.command {
        Command::CmaxSweep => commands::cmax_sweep(&ctx),
        Command::HlBound => commands::hl_bound(&ctx),
        Command::Nogo => commands::nogo(&ctx),
        Command::Reconstruct => commands::reconstruct(&ctx),
        Command::Classify => commands::classify(&ctx),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
