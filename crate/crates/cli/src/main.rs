//! `limitcascade`: price-limit cascade experiments on holdings data.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "limitcascade", version, about = "Price-limit cascade contagion on investor-stock networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: RunConfig,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Critical confidence per shock and price limit, with optional grid.
    Sweep,
    /// Per-stock nestedness, branching, k-core and driving-node probability.
    Metrics,
    /// Partial rewiring experiment and line fits of critical confidence.
    Randomize,
    /// Limit-down waves, peak timing and k-core trajectories.
    Waves,
    /// Single cascade with its full failure timeline.
    Cascade,
}

impl Command {
    fn run(self, cfg: &RunConfig) -> Result<()> {
        match self {
            Command::Sweep => commands::sweep_cmd(cfg),
            Command::Metrics => commands::metrics_cmd(cfg),
            Command::Randomize => commands::randomize_cmd(cfg),
            Command::Waves => commands::waves_cmd(cfg),
            Command::Cascade => commands::cascade_cmd(cfg),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => cli.flags.over(RunConfig::load(path)?),
        None => cli.flags,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    pool.build()?.install(|| cli.command.run(&cfg))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
