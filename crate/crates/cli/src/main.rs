//! Command-line front end: dataset generation, single-run box search, and
//! Monte-Carlo experiment sweeps.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
//! An experiment run with partially failed cells still writes the successful
//! rows and exits with the worst failing class.

mod experiment;
mod generate;
mod hunt;
mod manifest;

use std::process::ExitCode;

use bumphunt::{Error, ErrorClass, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bumphunt",
    version,
    about = "Find box-shaped regions of predictor space with a high response mean",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic Gaussian-target / uniform-noise dataset.
    Generate(generate::GenerateArgs),
    /// Run one box search on a dataset and write the trace, box, and rule.
    Hunt(hunt::HuntArgs),
    /// Sweep a replicated benchmark design and write records and aggregates.
    Experiment(experiment::ExperimentArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let informational =
                matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = err.print();
            return if informational {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => generate::run(args),
        Command::Hunt(args) => hunt::run(args),
        Command::Experiment(args) => experiment::run(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(class_code(err.class()))
        }
    }
}

/// Maps an error class to its process exit code.
pub(crate) fn class_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => 1,
        ErrorClass::Data => 2,
        ErrorClass::Numerical => 3,
    }
}

/// Resolves the master seed: an explicit flag wins, then the
/// `BUMPHUNT_SEED` environment variable, then `None`.
pub(crate) fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("BUMPHUNT_SEED") {
        Ok(text) => {
            let trimmed = text.trim();
            trimmed.parse::<u64>().map(Some).map_err(|_| {
                Error::InvalidConfig(format!(
                    "BUMPHUNT_SEED must be an unsigned integer, got {trimmed:?}"
                ))
            })
        }
        Err(_) => Ok(None),
    }
}

/// Creates the output directory if needed.
pub(crate) fn ensure_out_dir(path: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
