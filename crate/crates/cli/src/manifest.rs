//! Reproducibility manifest written beside every command's outputs.

use std::path::Path;

use bumphunt::{Error, Result};
use serde::Serialize;
use serde_json::Value;

/// Everything needed to reproduce a run bit-identically (timing aside):
/// the subcommand, the fully resolved configuration, the master seed, the
/// toolkit version, and the files read and written.
#[derive(Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub seed: Option<u64>,
    pub timestamp: String,
    pub config: Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: Option<u64>, config: Value) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            timestamp: chrono::Utc::now().to_rfc3339(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self).map_err(|e| {
            Error::Io {
                path: path.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::Other, e),
            }
        })
    }
}
