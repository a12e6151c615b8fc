//! `freefront` — batch front-end for the free-boundary predator-prey
//! laboratory. See README.md for the config format and artifact layout.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::CommandKind;

#[derive(Parser)]
#[command(
    name = "freefront",
    version,
    about = "Simulate, classify, and sweep the prey-driven free-boundary predator-prey system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides FREEFRONT_OUT and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (overrides FREEFRONT_THREADS and the config).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one run and export its trajectory and snapshots.
    Simulate(RunArgs),
    /// Integrate with verdict rules installed and export a verdict report.
    Classify(RunArgs),
    /// Classify a grid of (h0, rho) runs into a phase-diagram summary.
    Sweep(RunArgs),
    /// Solve the semi-wave problem for the asymptotic front speed.
    Semiwave(RunArgs),
    /// Closed-form equilibrium plus the monotone iteration cross-check.
    Equilibrium(RunArgs),
    /// Spreading barrier, habitat bound, and sigma_1 samples.
    Thresholds(RunArgs),
    /// Comparison-principle suites (logistic sandwich, upper ordering).
    Compare(RunArgs),
}

impl Command {
    fn split(self) -> (CommandKind, RunArgs) {
        match self {
            Command::Simulate(a) => (CommandKind::Simulate, a),
            Command::Classify(a) => (CommandKind::Classify, a),
            Command::Sweep(a) => (CommandKind::Sweep, a),
            Command::Semiwave(a) => (CommandKind::Semiwave, a),
            Command::Equilibrium(a) => (CommandKind::Equilibrium, a),
            Command::Thresholds(a) => (CommandKind::Thresholds, a),
            Command::Compare(a) => (CommandKind::Compare, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("freefront: cannot read {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match config::parse_config(&text, kind, args.out, args.threads) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("freefront: {e}");
            return ExitCode::from(1);
        }
    };
    match commands::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("freefront: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
