//! Run manifests.
//!
//! Every output directory receives a `manifest.json` describing the run:
//! subcommand, fully resolved parameters, seed, worker count, input and
//! output paths, library version and wall-clock duration. Re-running from a
//! manifest (`rankcal rerun`) reproduces all artifacts byte for byte; only
//! the manifest's own duration and worker fields may differ.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{data, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub workers: usize,
    pub params: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub duration_ms: u64,
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> CliResult<()> {
    let mut body = serde_json::to_string_pretty(manifest)?;
    body.push('\n');
    fs::write(dir.join(MANIFEST_FILE), body)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> CliResult<RunManifest> {
    let body = fs::read_to_string(path)
        .map_err(|e| data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&body).map_err(|e| data(format!("{}: {e}", path.display())))
}
