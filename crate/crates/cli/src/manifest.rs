//! JSON sidecar written next to every file output, sufficient to re-run
//! the command bit-exactly.

use std::path::{Path, PathBuf};

use duality_core::ExperimentConfig;
use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::error::CliError;

pub const TOOL_NAME: &str = "mzi-duality";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    /// Subcommand name, e.g. `sweep`.
    pub command: String,
    /// Fully resolved invocation: explicit config flags and seed.
    pub invocation: Command,
    pub config: Option<ExperimentConfig>,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new(invocation: Command, config: Option<ExperimentConfig>, seed: Option<u64>) -> Self {
        RunManifest {
            tool: TOOL_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            command: invocation.name().to_string(),
            invocation,
            config,
            seed,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("{}: invalid manifest: {e}", path.display())))
    }
}

/// `out/sweep.csv` -> `out/sweep.manifest.json`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".to_string());
    output.with_file_name(format!("{stem}.manifest.json"))
}
