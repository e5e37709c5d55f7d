//! Pipeline subcommands. Each command consumes only declared inputs from
//! the workdir, appends its own stage artifacts, and prints a short summary
//! line, so deleting the workdir and replaying the commands reproduces
//! everything bit for bit.

mod fit;
mod generate;
mod report;
mod sensitivity;
mod sweep;

pub use fit::cmd_fit;
pub use generate::cmd_generate;
pub use report::{cmd_report, ReportSummary};
pub use sensitivity::cmd_sensitivity;
pub use sweep::cmd_sweep;

use crate::config::{LoadedConfig, Pipeline};
use crate::error::{CliError, CliResult};
use crate::stages::{self, DATASET_DIR, SWEEP_DIR};
use fixfit::dataset::Dataset;
use fixfit::nn::{Activation, Mlp, MlpSpec};
use fixfit::sweep::{ReplicateRecord, SweepResult};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Per-replicate training history stored next to the weight file; the
/// sweep resumes from these and the report plots them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSidecar {
    pub record: ReplicateRecord,
    pub train_curve: Vec<f64>,
    pub val_curve: Vec<f64>,
}

pub fn sidecar_name(k: usize, replicate: usize) -> String {
    format!("replicate_k{k}_r{replicate}.json")
}

pub fn failure_name(k: usize, replicate: usize) -> String {
    format!("failure_k{k}_r{replicate}.json")
}

/// Load the generated dataset, failing with a pointer at `generate`.
pub(crate) fn load_dataset_stage(workdir: &Path) -> CliResult<Dataset> {
    let dir = workdir.join(DATASET_DIR);
    if !dir.join("manifest.json").exists() {
        return Err(CliError::data(format!(
            "no dataset found in {}; run generate first",
            dir.display()
        )));
    }
    Ok(fixfit::dataset::load_dataset(&dir)?)
}

/// The architecture family for the configured pipeline, sized to the
/// dataset. The bottleneck width given here is a placeholder; the sweep
/// replaces it per k.
pub(crate) fn base_spec(loaded: &LoadedConfig, ds: &Dataset) -> CliResult<MlpSpec> {
    let spec = match loaded.config.pipeline {
        Pipeline::Kepler => {
            if ds.input_dim() != 4 {
                return Err(CliError::data(format!(
                    "orbit pipeline expects 4 inputs, dataset has {}",
                    ds.input_dim()
                )));
            }
            if ds.output_dim() == 100 {
                MlpSpec::kepler(1)?
            } else {
                // Same layer family with the output layer matched to the
                // configured curve length.
                MlpSpec::new(
                    vec![4, 14, 14, 1, 110, 110, ds.output_dim()],
                    vec![
                        Activation::Tanh,
                        Activation::Tanh,
                        Activation::Linear,
                        Activation::Tanh,
                        Activation::Tanh,
                        Activation::Linear,
                    ],
                    3,
                )?
            }
        }
        Pipeline::LarterBreakspear => {
            if ds.input_dim() != 11 {
                return Err(CliError::data(format!(
                    "brain-network pipeline expects 11 inputs, dataset has {}",
                    ds.input_dim()
                )));
            }
            MlpSpec::lb(1, ds.output_dim())?
        }
    };
    Ok(spec)
}

/// Pick the weight file for sensitivity or fitting: an explicit flag wins,
/// then the configured path (relative to the workdir), then the best
/// replicate of the sweep's selected width.
pub(crate) fn resolve_weights(
    workdir: &Path,
    flag: Option<&Path>,
    configured: Option<&str>,
) -> CliResult<PathBuf> {
    if let Some(p) = flag {
        return Ok(p.to_path_buf());
    }
    if let Some(rel) = configured {
        return Ok(workdir.join(rel));
    }
    let sweep_json = workdir.join(SWEEP_DIR).join("sweep.json");
    if !sweep_json.exists() {
        return Err(CliError::data(format!(
            "no weights given and {} does not exist; run sweep first or pass --weights",
            sweep_json.display()
        )));
    }
    let sr: SweepResult = stages::read_json(&sweep_json)?;
    let best = sr
        .records
        .iter()
        .filter(|r| r.k == sr.selected_k)
        .min_by(|a, b| a.val_mse.total_cmp(&b.val_mse).then(a.replicate.cmp(&b.replicate)))
        .ok_or_else(|| {
            CliError::data(format!(
                "{} holds no successful replicate at the selected width {}",
                sweep_json.display(),
                sr.selected_k
            ))
        })?;
    Ok(workdir.join(SWEEP_DIR).join(&best.weight_file))
}

pub(crate) fn load_model(path: &Path) -> CliResult<Mlp> {
    if !path.exists() {
        return Err(CliError::data(format!("weight file {} does not exist", path.display())));
    }
    Ok(Mlp::load_weights(path)?)
}

/// Mean validation error with standard-error bars per bottleneck width.
pub(crate) fn error_vs_k_svg(sr: &SweepResult) -> String {
    let mut pts: Vec<(f64, f64, f64)> = sr
        .k_values
        .iter()
        .zip(sr.means.iter().zip(&sr.std_errors))
        .map(|(&k, (&m, &s))| (k as f64, m, if s.is_finite() { s } else { 0.0 }))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    fixfit::svg::errorbar_plot(
        "Validation error by bottleneck width",
        "bottleneck width k",
        "validation MSE",
        &pts,
        true,
    )
}

pub(crate) fn sensitivity_heatmap_svg(
    input_names: &[String],
    latent_labels: &[String],
    values: &[Vec<f64>],
) -> String {
    fixfit::svg::heatmap("Uncorrelated input sensitivities", input_names, latent_labels, values)
}

pub(crate) fn latent_labels(count: usize) -> Vec<String> {
    (1..=count).map(|j| format!("L{j}")).collect()
}

pub(crate) fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}
