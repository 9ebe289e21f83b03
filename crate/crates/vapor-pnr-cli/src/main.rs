//! Command-line front end for the atomic-vapor photon-number-resolving
//! detector toolkit.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::RunConfig;
use output::{Format, Meta, OutputSink};

/// Bundled reference configuration, used when --config is omitted.
const BUNDLED_CONFIG: &str = include_str!("../configs/paper-design.json");

#[derive(Parser)]
#[command(
    name = "vapor-pnr",
    version,
    about = "Atomic-vapor photon-number-resolving detector toolkit",
    long_about = "Evaluates the closed-form detector model, integrates the single-photon \
absorption dynamics against a brute-force quantum reference, Monte Carlo-simulates \
cycling-transition readout, and searches the design parameter space.\n\n\
Output directory resolution: --out flag, then the config's output_dir, then the \
VAPOR_PNR_OUT environment variable, then the current directory."
)]
struct Cli {
    /// Run configuration (JSON). Omitted: the bundled reference design.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides config and VAPOR_PNR_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Which file formats to write.
    #[arg(long, global = true, value_enum, default_value = "both")]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Efficiency budget and dark-count report under both frequency conventions
    Budget,
    /// Closed-form vs numeric absorption dynamics, optional quantum reference
    Dynamics,
    /// Seeded readout Monte Carlo and photon-number confusion matrix
    Mc,
    /// Cartesian parameter sweep to CSV/JSON
    Sweep,
    /// Constrained design optimization with evaluation trace
    Optimize,
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();

    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?,
        None => BUNDLED_CONFIG.to_string(),
    };
    let mut config = RunConfig::from_json(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }

    let out_dir = cli
        .out
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os("VAPOR_PNR_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let meta = Meta::new(&config.canonical_json(), config.seed);
    let mut sink = OutputSink::new(&out_dir, meta, cli.format)?;

    match cli.command {
        Command::Budget => commands::cmd_budget(&config, &mut sink),
        Command::Dynamics => commands::cmd_dynamics(&config, &mut sink),
        Command::Mc => commands::cmd_mc(&config, &mut sink),
        Command::Sweep => commands::cmd_sweep(&config, &mut sink),
        Command::Optimize => commands::cmd_optimize(&config, &mut sink),
    }
}
