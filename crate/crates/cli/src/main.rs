use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use kclg_cli::{exit_code, run, Command, ExperimentConfig, Overrides};

/// Simulation and analysis runs for kinetically constrained lattice gases.
#[derive(Parser)]
#[command(name = "kclg", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: Overrides,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = ExperimentConfig::load(cli.command, cli.config.as_deref(), &cli.flags)
        .and_then(|c| run(&c));
    match &result {
        Ok(r) => {
            eprintln!(
                "{}: {} artifacts in {:.2}s ({})",
                cli.command.name(),
                r.manifest.artifacts.len(),
                r.manifest.wall_time_s,
                r.manifest.status
            );
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
