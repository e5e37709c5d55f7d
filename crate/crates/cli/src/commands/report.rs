//! The `report` subcommand: render the consolidated plot bundle from
//! whatever artifacts the workdir holds. Missing inputs are listed in
//! `report.json` and the partial bundle is still produced, so the command
//! succeeds on any workdir, including an empty one.

use super::{error_vs_k_svg, latent_labels, sensitivity_heatmap_svg, sidecar_name, ReplicateSidecar};
use crate::error::{CliError, CliResult};
use crate::stages::{self, DATASET_DIR, REPORT_DIR, SENSITIVITY_DIR, SWEEP_DIR};
use fixfit::svg::Series;
use fixfit::sweep::SweepResult;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const ERROR_PLOT: &str = "error_vs_k.svg";
pub const SENSITIVITY_PLOT: &str = "sensitivity_heatmap.svg";
pub const LATENT_PLOT: &str = "latent_histogram.svg";
pub const CURVES_PLOT: &str = "training_curves.svg";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingPlot {
    pub plot: String,
    pub reason: String,
}

/// Contents of `report.json`: which plots were rendered and which inputs
/// were absent. Paths are workdir-relative so the bundle is relocatable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub written: Vec<String>,
    pub missing: Vec<MissingPlot>,
}

pub fn cmd_report(workdir: &Path) -> CliResult<ReportSummary> {
    let dir = workdir.join(REPORT_DIR);
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;

    let mut written = Vec::new();
    let mut missing = Vec::new();
    let plots: [(&str, fn(&Path) -> Result<String, String>); 4] = [
        (ERROR_PLOT, build_error_plot),
        (SENSITIVITY_PLOT, build_sensitivity_plot),
        (LATENT_PLOT, build_latent_plot),
        (CURVES_PLOT, build_curves_plot),
    ];
    for (name, build) in plots {
        match build(workdir) {
            Ok(svg) => {
                super::write_text(&dir.join(name), &svg)?;
                written.push(name.to_string());
            }
            Err(reason) => missing.push(MissingPlot { plot: name.to_string(), reason }),
        }
    }
    written.sort();
    missing.sort_by(|a, b| a.plot.cmp(&b.plot));
    let summary = ReportSummary { written, missing };
    stages::write_json(&dir.join("report.json"), &summary)?;

    if summary.written.is_empty() {
        println!("report: empty; no pipeline artifacts found in {}", workdir.display());
    } else {
        println!(
            "report: wrote {} plot(s) to {}: {}",
            summary.written.len(),
            dir.display(),
            summary.written.join(", ")
        );
    }
    for m in &summary.missing {
        println!("report: skipped {} ({})", m.plot, m.reason);
    }
    Ok(summary)
}

/// Validation error against bottleneck width, from the sweep report.
fn build_error_plot(workdir: &Path) -> Result<String, String> {
    let sr = load_sweep(workdir)?;
    Ok(error_vs_k_svg(&sr))
}

/// Input-to-latent sensitivity heatmap, parsed back from the CSV artifact.
fn build_sensitivity_plot(workdir: &Path) -> Result<String, String> {
    let rel = format!("{SENSITIVITY_DIR}/sensitivity.csv");
    let path = workdir.join(SENSITIVITY_DIR).join("sensitivity.csv");
    if !path.exists() {
        return Err(format!("{rel} not found; run sensitivity first"));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {rel}: {e}"))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| format!("{rel} is empty"))?;
    let labels: Vec<String> = header.split(',').skip(1).map(|s| s.to_string()).collect();
    if labels.is_empty() {
        return Err(format!("{rel} has no latent columns"));
    }
    let mut names = Vec::new();
    let mut values = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let mut cells = line.split(',');
        let name = cells.next().unwrap_or_default().to_string();
        let row: Result<Vec<f64>, _> = cells.map(|c| c.parse::<f64>()).collect();
        let row = row.map_err(|_| format!("{rel} holds a non-numeric cell in row {name:?}"))?;
        if row.len() != labels.len() {
            return Err(format!("{rel} row {name:?} has {} cells, expected {}", row.len(), labels.len()));
        }
        names.push(name);
        values.push(row);
    }
    if names.is_empty() {
        return Err(format!("{rel} holds no data rows"));
    }
    Ok(sensitivity_heatmap_svg(&names, &labels, &values))
}

/// Distribution of each latent coordinate over the training inputs, using
/// the best replicate of the sweep's selected width.
fn build_latent_plot(workdir: &Path) -> Result<String, String> {
    let ds_dir = workdir.join(DATASET_DIR);
    if !ds_dir.join("manifest.json").exists() {
        return Err(format!("{DATASET_DIR}/manifest.json not found; run generate first"));
    }
    let ds = fixfit::dataset::load_dataset(&ds_dir)
        .map_err(|e| format!("cannot load {DATASET_DIR}: {e}"))?;
    let sr = load_sweep(workdir)?;
    let best = sr
        .records
        .iter()
        .filter(|r| r.k == sr.selected_k)
        .min_by(|a, b| a.val_mse.total_cmp(&b.val_mse).then(a.replicate.cmp(&b.replicate)))
        .ok_or_else(|| format!("{SWEEP_DIR}/sweep.json holds no replicate at the selected width"))?;
    let weight_rel = format!("{SWEEP_DIR}/{}", best.weight_file);
    let model = fixfit::nn::Mlp::load_weights(&workdir.join(SWEEP_DIR).join(&best.weight_file))
        .map_err(|e| format!("cannot load {weight_rel}: {e}"))?;
    let (tx, _) = ds.train_xy();
    let latents = model.encode(&tx).map_err(|e| format!("cannot encode the dataset: {e}"))?;

    let bins = 20;
    let mut all_series = Vec::new();
    for j in 0..latents.ncols() {
        let col: Vec<f64> = latents.column(j).to_vec();
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(1e-12);
        let mut counts = vec![0usize; bins];
        for &v in &col {
            let b = (((v - lo) / span) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1;
        }
        let pts: Vec<(f64, f64)> = counts
            .iter()
            .enumerate()
            .map(|(b, &c)| (lo + (b as f64 + 0.5) * span / bins as f64, c as f64))
            .collect();
        all_series.push(pts);
    }
    let labels = latent_labels(all_series.len());
    let series: Vec<Series<'_>> = all_series
        .iter()
        .zip(&labels)
        .map(|(pts, name)| Series { name, points: pts })
        .collect();
    Ok(fixfit::svg::line_plot(
        "Latent coordinate distributions",
        "latent value",
        "training samples",
        &series,
        false,
    ))
}

/// Validation curves of every replicate at the selected width.
fn build_curves_plot(workdir: &Path) -> Result<String, String> {
    let sr = load_sweep(workdir)?;
    let mut curves = Vec::new();
    let mut names = Vec::new();
    for rec in sr.records.iter().filter(|r| r.k == sr.selected_k) {
        let rel = format!("{SWEEP_DIR}/{}", sidecar_name(rec.k, rec.replicate));
        let path = workdir.join(SWEEP_DIR).join(sidecar_name(rec.k, rec.replicate));
        let sc: ReplicateSidecar =
            stages::read_json(&path).map_err(|_| format!("{rel} not found or unreadable"))?;
        let pts: Vec<(f64, f64)> = sc
            .val_curve
            .iter()
            .enumerate()
            .map(|(e, &v)| (e as f64, v))
            .collect();
        names.push(format!("replicate {}", rec.replicate));
        curves.push(pts);
    }
    if curves.is_empty() {
        return Err(format!("{SWEEP_DIR}/sweep.json holds no replicate at the selected width"));
    }
    let series: Vec<Series<'_>> = curves
        .iter()
        .zip(&names)
        .map(|(pts, name)| Series { name, points: pts })
        .collect();
    Ok(fixfit::svg::line_plot(
        "Validation error during training at the selected width",
        "epoch",
        "validation MSE",
        &series,
        true,
    ))
}

fn load_sweep(workdir: &Path) -> Result<SweepResult, String> {
    let rel = format!("{SWEEP_DIR}/sweep.json");
    let path = workdir.join(SWEEP_DIR).join("sweep.json");
    if !path.exists() {
        return Err(format!("{rel} not found; run sweep first"));
    }
    stages::read_json(&path).map_err(|e| format!("cannot parse {rel}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::super::{cmd_generate, cmd_sensitivity, cmd_sweep};
    use super::*;
    use crate::config::load_config;

    #[test]
    fn empty_workdir_yields_an_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let summary = cmd_report(dir.path()).unwrap();
        assert!(summary.written.is_empty());
        assert_eq!(summary.missing.len(), 4);
        let on_disk: ReportSummary =
            stages::read_json(&dir.path().join(REPORT_DIR).join("report.json")).unwrap();
        assert_eq!(on_disk, summary);
    }

    #[test]
    fn full_pipeline_yields_all_four_plots_with_stable_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(
            &path,
            r#"{
                "pipeline": "kepler",
                "seed": 3,
                "sampling": {"n_raw": 64},
                "train": {"batch_size": 64, "max_epochs": 15, "patience": 6},
                "sweep": {"ks": [1, 2], "replicates": 2},
                "sensitivity": {"degree": 2}
            }"#,
        )
        .unwrap();
        let loaded = load_config(&path, &[]).unwrap();
        cmd_generate(&loaded, dir.path()).unwrap();
        cmd_sweep(&loaded, dir.path()).unwrap();
        cmd_sensitivity(&loaded, dir.path(), None).unwrap();
        let summary = cmd_report(dir.path()).unwrap();
        assert_eq!(summary.written.len(), 4, "missing: {:?}", summary.missing);
        let report_dir = dir.path().join(REPORT_DIR);
        for name in [ERROR_PLOT, SENSITIVITY_PLOT, LATENT_PLOT, CURVES_PLOT] {
            let svg = std::fs::read_to_string(report_dir.join(name)).unwrap();
            assert!(svg.starts_with("<svg"), "{name} is not an SVG");
            // Self-contained: no external assets or scripts.
            assert!(!svg.contains("href"), "{name} must not reference external assets");
            assert!(!svg.contains("<script"), "{name} must not carry scripts");
        }
        let before = std::fs::read(report_dir.join(ERROR_PLOT)).unwrap();
        cmd_report(dir.path()).unwrap();
        assert_eq!(before, std::fs::read(report_dir.join(ERROR_PLOT)).unwrap());
    }

    #[test]
    fn partial_artifacts_yield_a_partial_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(
            &path,
            r#"{
                "pipeline": "kepler",
                "sampling": {"n_raw": 64},
                "train": {"batch_size": 64, "max_epochs": 10, "patience": 5},
                "sweep": {"ks": [2], "replicates": 2}
            }"#,
        )
        .unwrap();
        let loaded = load_config(&path, &[]).unwrap();
        cmd_generate(&loaded, dir.path()).unwrap();
        cmd_sweep(&loaded, dir.path()).unwrap();
        let summary = cmd_report(dir.path()).unwrap();
        assert!(summary.written.contains(&ERROR_PLOT.to_string()));
        assert!(summary.written.contains(&LATENT_PLOT.to_string()));
        assert!(summary.missing.iter().any(|m| m.plot == SENSITIVITY_PLOT));
    }
}
