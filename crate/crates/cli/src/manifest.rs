use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::commands::{Command, Outcome};
use crate::{CliResult, Failure};

/// Record of one invocation, written to `<primary output>.manifest.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub format_version: u32,
    /// Subcommand name and its full parameter set, defaults included.
    #[serde(flatten)]
    pub run: Command,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub duration_secs: f64,
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    primary.with_file_name(name)
}

/// Runs `command` and writes its manifest; returns the stdout summary.
pub fn run_recorded(command: Command) -> CliResult<String> {
    let start = Instant::now();
    let Outcome {
        inputs,
        outputs,
        summary,
    } = command.run()?;
    if let Some(primary) = outputs.first() {
        let manifest = RunManifest {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            format_version: sketchvote::FORMAT_VERSION,
            seed: command.seed(),
            run: command,
            inputs,
            outputs: outputs.clone(),
            duration_secs: start.elapsed().as_secs_f64(),
        };
        sketchvote::report::write_json(manifest_path(primary), &manifest)?;
    }
    Ok(serde_json::to_string(&summary).expect("serializable"))
}

pub fn replay(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let manifest: RunManifest = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::Invalid(format!("{}: not a run manifest: {e}", path.display())))?;
    run_recorded(manifest.run)
}
