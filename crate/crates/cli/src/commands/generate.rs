//! The `generate` subcommand: sample, simulate, filter, and persist the
//! training dataset.

use crate::config::{LoadedConfig, Pipeline};
use crate::error::CliResult;
use crate::stages::{self, DATASET_DIR, DATASET_STAGE_MANIFEST};
use std::path::Path;

/// Generate the configured pipeline's dataset under `workdir/dataset`. A
/// complete dataset written under the same config hash is reused untouched,
/// so reruns neither recompute nor change bytes on disk.
pub fn cmd_generate(loaded: &LoadedConfig, workdir: &Path) -> CliResult<()> {
    let cfg = &loaded.config;
    let dir = stages::prepare_stage(workdir, DATASET_DIR, DATASET_STAGE_MANIFEST, &loaded.hash)?;
    if dir.join("manifest.json").exists() {
        match fixfit::dataset::load_dataset(&dir) {
            Ok(ds) => {
                println!(
                    "dataset: reusing {} ({} samples, {} train / {} validation)",
                    dir.display(),
                    ds.len(),
                    ds.train_idx.len(),
                    ds.val_idx.len()
                );
                return Ok(());
            }
            Err(e) => {
                println!("dataset: existing artifacts unreadable ({e}); regenerating");
            }
        }
    }
    let ds = match cfg.pipeline {
        Pipeline::Kepler => fixfit::dataset::generate_kepler(
            &fixfit::dataset::kepler_param_space(),
            cfg.sampling.n_raw,
            &cfg.kepler_dataset_config(),
        )?,
        Pipeline::LarterBreakspear => {
            let conn = cfg.connectivity(&loaded.base_dir)?;
            fixfit::dataset::generate_lb(
                &cfg.lb_param_space(),
                cfg.sampling.n_raw,
                &conn,
                &cfg.lb_dataset_config(),
            )?
        }
    };
    fixfit::dataset::save_dataset(&ds, &dir)?;
    let p = &ds.provenance;
    let rejected: Vec<String> = p.rejected.iter().map(|(k, v)| format!("{k} {v}")).collect();
    println!(
        "dataset: retained {} of {} raw samples ({} train / {} validation); rejected: {}",
        p.retained,
        p.n_raw,
        ds.train_idx.len(),
        ds.val_idx.len(),
        if rejected.is_empty() { "none".to_string() } else { rejected.join(", ") }
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_config;

    fn kepler_loaded(dir: &Path, n_raw: usize) -> LoadedConfig {
        let path = dir.join("config.json");
        std::fs::write(
            &path,
            format!(r#"{{"pipeline": "kepler", "sampling": {{"n_raw": {n_raw}}}}}"#),
        )
        .unwrap();
        load_config(&path, &[]).unwrap()
    }

    #[test]
    fn generate_writes_a_loadable_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let loaded = kepler_loaded(dir.path(), 64);
        cmd_generate(&loaded, dir.path()).unwrap();
        let ds = fixfit::dataset::load_dataset(&dir.path().join(DATASET_DIR)).unwrap();
        assert_eq!(ds.input_dim(), 4);
        assert_eq!(ds.output_dim(), 100);
        assert!(ds.len() > 0);
        assert!(dir.path().join(DATASET_DIR).join(DATASET_STAGE_MANIFEST).exists());
    }

    #[test]
    fn rerun_reuses_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let loaded = kepler_loaded(dir.path(), 64);
        cmd_generate(&loaded, dir.path()).unwrap();
        let x_path = dir.path().join(DATASET_DIR).join("X.f64");
        let before = std::fs::read(&x_path).unwrap();
        let mtime = std::fs::metadata(&x_path).unwrap().modified().unwrap();
        cmd_generate(&loaded, dir.path()).unwrap();
        assert_eq!(before, std::fs::read(&x_path).unwrap());
        assert_eq!(mtime, std::fs::metadata(&x_path).unwrap().modified().unwrap());
    }

    #[test]
    fn changed_config_against_old_workdir_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let loaded = kepler_loaded(dir.path(), 64);
        cmd_generate(&loaded, dir.path()).unwrap();
        let other = kepler_loaded(dir.path(), 128);
        let err = cmd_generate(&other, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
