//! The `sensitivity` subcommand: uncorrelated global sensitivity of each
//! latent coordinate to each input parameter, written as CSV plus heatmap.

use super::{latent_labels, sensitivity_heatmap_svg};
use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use crate::stages::{self, SENSITIVITY_DIR, STAGE_MANIFEST};
use fixfit::scsa::{sensitivity_matrix, write_sensitivity_csv};
use std::path::Path;

pub fn cmd_sensitivity(
    loaded: &LoadedConfig,
    workdir: &Path,
    weights_flag: Option<&Path>,
) -> CliResult<()> {
    let cfg = &loaded.config;
    let ds = super::load_dataset_stage(workdir)?;
    let dir = stages::prepare_stage(workdir, SENSITIVITY_DIR, STAGE_MANIFEST, &loaded.hash)?;
    let weights_path =
        super::resolve_weights(workdir, weights_flag, cfg.sensitivity.weights.as_deref())?;
    let model = super::load_model(&weights_path)?;
    if model.spec.input_dim() != ds.input_dim() {
        return Err(CliError::data(format!(
            "weights {} expect {} inputs but the dataset has {}",
            weights_path.display(),
            model.spec.input_dim(),
            ds.input_dim()
        )));
    }
    let matrix = sensitivity_matrix(&model, &ds, cfg.sensitivity.degree)?;
    write_sensitivity_csv(&matrix, &dir.join("sensitivity.csv"))?;
    let svg =
        sensitivity_heatmap_svg(&matrix.input_names, &latent_labels(matrix.latent_count()), &matrix.s_unc);
    super::write_text(&dir.join("sensitivity.svg"), &svg)?;
    println!(
        "sensitivity: {} inputs x {} latents from {} (degree {}, {} samples)",
        matrix.input_count(),
        matrix.latent_count(),
        weights_path.display(),
        matrix.basis_degree,
        matrix.sample_count
    );
    for (name, row) in matrix.input_names.iter().zip(&matrix.s_unc) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
        println!("sensitivity: {name}: {}", cells.join(" "));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{cmd_generate, cmd_sweep};
    use super::*;
    use crate::config::load_config;

    fn pipeline_through_sweep() -> (tempfile::TempDir, LoadedConfig) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(
            &path,
            r#"{
                "pipeline": "kepler",
                "seed": 2,
                "sampling": {"n_raw": 64},
                "train": {"batch_size": 64, "max_epochs": 20, "patience": 8},
                "sweep": {"ks": [2], "replicates": 2},
                "sensitivity": {"degree": 2}
            }"#,
        )
        .unwrap();
        let loaded = load_config(&path, &[]).unwrap();
        cmd_generate(&loaded, dir.path()).unwrap();
        cmd_sweep(&loaded, dir.path()).unwrap();
        (dir, loaded)
    }

    #[test]
    fn sensitivity_writes_csv_and_heatmap_from_the_sweep_best() {
        let (dir, loaded) = pipeline_through_sweep();
        cmd_sensitivity(&loaded, dir.path(), None).unwrap();
        let out = dir.path().join(SENSITIVITY_DIR);
        let csv = std::fs::read_to_string(out.join("sensitivity.csv")).unwrap();
        assert!(csv.starts_with("input,L1,L2\n"));
        assert_eq!(csv.lines().count(), 1 + 4, "header plus one row per input");
        let svg = std::fs::read_to_string(out.join("sensitivity.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("omega0"));

        // Rerun must reproduce the CSV byte for byte.
        let before = std::fs::read(out.join("sensitivity.csv")).unwrap();
        cmd_sensitivity(&loaded, dir.path(), None).unwrap();
        assert_eq!(before, std::fs::read(out.join("sensitivity.csv")).unwrap());
    }

    #[test]
    fn missing_weight_file_names_the_path() {
        let (dir, loaded) = pipeline_through_sweep();
        let ghost = dir.path().join("no_such_weights.json");
        let err = cmd_sensitivity(&loaded, dir.path(), Some(&ghost)).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("no_such_weights.json"));
    }
}
