//! Experiment runner: reads a configuration, dispatches to one of the
//! subcommands, and writes CSV artifacts with a checksummed manifest.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Command, ExperimentConfig, Method, Overrides};
pub use manifest::{verify_manifest, Manifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Module(#[from] kclg::error::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Clone, Debug)]
pub struct RunReport {
    pub manifest: Manifest,
    /// Some search hit its budget; the artifacts hold partial results.
    pub budget_exhausted: bool,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.budget_exhausted {
            EXIT_BUDGET
        } else {
            EXIT_OK
        }
    }
}

pub fn exit_code(r: &Result<RunReport, CliError>) -> i32 {
    match r {
        Ok(rep) => rep.exit_code(),
        Err(CliError::Validation(_)) => EXIT_VALIDATION,
        Err(_) => EXIT_RUNTIME,
    }
}

pub fn run(c: &ExperimentConfig) -> Result<RunReport, CliError> {
    c.validate()?;
    let start = Instant::now();
    let mut w = manifest::ArtifactWriter::create(&c.out)?;
    w.write("config.cfg", c.to_file_string().as_bytes())?;
    let exhausted = match c.command {
        Command::Simulate => commands::simulate(c, &mut w)?,
        Command::Msd => commands::msd(c, &mut w)?,
        Command::Varbound => commands::varbound(c, &mut w)?,
        Command::Frameability => commands::frameability(c, &mut w)?,
        Command::Percolation => commands::percolation(c, &mut w)?,
        Command::PathCheck => commands::path_check(c, &mut w)?,
    };
    let manifest = w.finish(c, start.elapsed().as_secs_f64(), exhausted)?;
    Ok(RunReport {
        manifest,
        budget_exhausted: exhausted,
    })
}
