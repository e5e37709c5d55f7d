//! Stage directories and their manifests.
//!
//! Every pipeline stage owns one subdirectory of the workdir and stamps a
//! small manifest into it recording the tool version and the hash of the
//! configuration that produced it. Stages append artifacts; they never
//! rewrite a directory produced under a different configuration. A hash
//! mismatch is reported as a configuration error with the remedy (pick a
//! fresh workdir) spelled out.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const FORMAT_VERSION: u32 = 1;

/// File name for the stage marker. The dataset stage uses `stage.json`
/// because the dataset serializer owns `manifest.json` in that directory;
/// all other stages use `manifest.json`.
pub const STAGE_MANIFEST: &str = "manifest.json";
pub const DATASET_STAGE_MANIFEST: &str = "stage.json";

pub const DATASET_DIR: &str = "dataset";
pub const SWEEP_DIR: &str = "sweep";
pub const SENSITIVITY_DIR: &str = "sensitivity";
pub const FIT_DIR: &str = "fit";
pub const REPORT_DIR: &str = "report";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub format_version: u32,
    pub tool_version: String,
    pub config_hash: String,
}

impl StageManifest {
    pub fn new(stage: &str, config_hash: &str) -> Self {
        StageManifest {
            stage: stage.to_string(),
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash.to_string(),
        }
    }
}

/// Create (or re-enter) a stage directory. When the stage marker already
/// exists its config hash must match; otherwise the artifacts on disk were
/// produced under different settings and appending to them would mix runs.
pub fn prepare_stage(
    workdir: &Path,
    stage: &str,
    marker_name: &str,
    config_hash: &str,
) -> CliResult<PathBuf> {
    let dir = workdir.join(stage);
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
    let marker = dir.join(marker_name);
    if marker.exists() {
        let existing = read_manifest(&marker)?;
        if existing.config_hash != config_hash {
            return Err(CliError::config(format!(
                "{} holds artifacts for config hash {} but the current config hashes to {}; \
                 point --workdir at a fresh directory or restore the original config",
                dir.display(),
                &existing.config_hash[..12.min(existing.config_hash.len())],
                &config_hash[..12]
            )));
        }
        return Ok(dir);
    }
    let manifest = StageManifest::new(stage, config_hash);
    write_json(&marker, &manifest)?;
    Ok(dir)
}

pub fn read_manifest(path: &Path) -> CliResult<StageManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("{} is not a stage manifest: {e}", path.display())))
}

/// Serialize a value as pretty JSON with a trailing newline, the format all
/// pipeline artifacts share.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::data(format!("cannot serialize {}: {e}", path.display())))?;
    body.push('\n');
    std::fs::write(path, body)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("cannot parse {}: {e}", path.display())))
}
