//! The `fit` subcommand: global latent-parameter fitting of a raw target
//! through the decoder. The raw target is rescaled with the transform
//! stored alongside the dataset; fitting without that record is refused
//! because silently mis-scaled targets would fit garbage.

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use crate::stages::{self, DATASET_DIR, FIT_DIR, STAGE_MANIFEST};
use fixfit::fitting::{
    fit_latent, latent_bounds, write_fit_json, write_fit_trace_csv, FitConfig, FitReport,
};
use std::path::Path;

pub fn cmd_fit(
    loaded: &LoadedConfig,
    workdir: &Path,
    target_path: &Path,
    weights_flag: Option<&Path>,
) -> CliResult<()> {
    let cfg = &loaded.config;
    let dataset_manifest = workdir.join(DATASET_DIR).join("manifest.json");
    if !dataset_manifest.exists() {
        return Err(CliError::data(format!(
            "{} is missing, so no stored output transform exists; run generate first \
             (raw targets must be rescaled exactly as the training outputs were)",
            dataset_manifest.display()
        )));
    }
    let ds = super::load_dataset_stage(workdir)?;
    let dir = stages::prepare_stage(workdir, FIT_DIR, STAGE_MANIFEST, &loaded.hash)?;
    let weights_path = super::resolve_weights(workdir, weights_flag, cfg.fit.weights.as_deref())?;
    let model = super::load_model(&weights_path)?;
    if model.spec.output_dim() != ds.output_dim() {
        return Err(CliError::data(format!(
            "weights {} produce {} outputs but the dataset has {}",
            weights_path.display(),
            model.spec.output_dim(),
            ds.output_dim()
        )));
    }
    let raw = parse_target_file(target_path)?;
    if raw.len() != model.spec.output_dim() {
        return Err(CliError::data(format!(
            "target {} holds {} values but the model outputs {}",
            target_path.display(),
            raw.len(),
            model.spec.output_dim()
        )));
    }
    let scaled = ds.transform.apply(&raw).map_err(|e| {
        CliError::data(format!(
            "target {} is incompatible with the stored output transform: {e}",
            target_path.display()
        ))
    })?;

    let bounds = latent_bounds(&model, &ds)?;
    let mut fit_cfg = FitConfig::new(bounds);
    fit_cfg.temperature = cfg.fit.temperature;
    fit_cfg.step_size = cfg.fit.step_size;
    fit_cfg.n_hops = cfg.fit.n_hops;
    fit_cfg.seed = cfg.fit.seed.unwrap_or(cfg.seed);
    let result = fit_latent(&model, &scaled, &fit_cfg)?;

    let report = FitReport { config: fit_cfg, result };
    write_fit_json(&report, &dir.join("fit.json"))?;
    write_fit_trace_csv(&report.result, &dir.join("fit_trace.csv"))?;
    let pts: Vec<(f64, f64)> = report
        .result
        .trace
        .iter()
        .enumerate()
        .map(|(i, h)| (i as f64, h.objective))
        .collect();
    let series = [fixfit::svg::Series { name: "local minimum", points: &pts }];
    let svg = fixfit::svg::line_plot(
        "Local minimum objective per hop",
        "hop",
        "objective",
        &series,
        false,
    );
    super::write_text(&dir.join("fit_objective.svg"), &svg)?;

    let latent: Vec<String> =
        report.result.best_latent.iter().map(|v| format!("{v:.6}")).collect();
    println!(
        "fit: best objective {:.6e} at latent [{}] after {} evaluations",
        report.result.best_objective,
        latent.join(", "),
        report.result.evaluations
    );
    Ok(())
}

/// Parse a target vector file: a JSON array when it starts with `[`,
/// otherwise comma or whitespace separated decimals.
pub fn parse_target_file(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read target {}: {e}", path.display())))?;
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(CliError::data(format!("target {} is empty", path.display())));
    }
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).map_err(|e| {
            CliError::data(format!("target {} is not a JSON number array: {e}", path.display()))
        });
    }
    trimmed
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|_| {
                CliError::data(format!("target {} holds a non-numeric value {t:?}", path.display()))
            })
        })
        .collect()
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
                "seed": 8,
                "sampling": {"n_raw": 64},
                "train": {"batch_size": 64, "max_epochs": 20, "patience": 8},
                "sweep": {"ks": [2], "replicates": 2},
                "fit": {"n_hops": 3}
            }"#,
        )
        .unwrap();
        let loaded = load_config(&path, &[]).unwrap();
        cmd_generate(&loaded, dir.path()).unwrap();
        cmd_sweep(&loaded, dir.path()).unwrap();
        (dir, loaded)
    }

    /// Raw radii of the first validation sample, inverted from the stored
    /// transform so the command has to re-apply it.
    fn raw_target(workdir: &Path) -> Vec<f64> {
        let ds = fixfit::dataset::load_dataset(&workdir.join(DATASET_DIR)).unwrap();
        let row: Vec<f64> = ds.y.row(ds.val_idx[0]).to_vec();
        ds.transform.invert(&row)
    }

    #[test]
    fn fit_writes_report_trace_and_plot() {
        let (dir, loaded) = pipeline_through_sweep();
        let target = raw_target(dir.path());
        let target_path = dir.path().join("target.json");
        std::fs::write(&target_path, serde_json::to_string(&target).unwrap()).unwrap();
        cmd_fit(&loaded, dir.path(), &target_path, None).unwrap();
        let out = dir.path().join(FIT_DIR);
        let report: FitReport = stages::read_json(&out.join("fit.json")).unwrap();
        assert_eq!(report.config.n_hops, 3);
        assert_eq!(report.result.trace.len(), 1 + 3);
        assert!(report.result.best_objective.is_finite());
        let trace = std::fs::read_to_string(out.join("fit_trace.csv")).unwrap();
        assert!(trace.starts_with("hop,objective,accepted,line_search_failed,u0,u1\n"));
        assert!(out.join("fit_objective.svg").exists());
    }

    #[test]
    fn wrong_target_width_is_a_data_error() {
        let (dir, loaded) = pipeline_through_sweep();
        let target_path = dir.path().join("short.csv");
        std::fs::write(&target_path, "1.0, 2.0, 3.0").unwrap();
        let err = cmd_fit(&loaded, dir.path(), &target_path, None).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("3 values"));
    }

    #[test]
    fn missing_dataset_refuses_to_fit() {
        let (dir, loaded) = pipeline_through_sweep();
        let target_path = dir.path().join("target.csv");
        std::fs::write(&target_path, "1.0").unwrap();
        let bare = tempfile::tempdir().unwrap();
        let err = cmd_fit(&loaded, bare.path(), &target_path, None).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("transform"));
    }

    #[test]
    fn target_parsing_accepts_json_csv_and_whitespace() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t1");
        std::fs::write(&p, "[1.0, 2.5, -3.0]").unwrap();
        assert_eq!(parse_target_file(&p).unwrap(), vec![1.0, 2.5, -3.0]);
        std::fs::write(&p, "1.0,2.5,-3.0\n").unwrap();
        assert_eq!(parse_target_file(&p).unwrap(), vec![1.0, 2.5, -3.0]);
        std::fs::write(&p, "1.0 2.5\n-3.0").unwrap();
        assert_eq!(parse_target_file(&p).unwrap(), vec![1.0, 2.5, -3.0]);
        std::fs::write(&p, "1.0, banana").unwrap();
        assert!(parse_target_file(&p).is_err());
        std::fs::write(&p, "").unwrap();
        assert!(parse_target_file(&p).is_err());
    }
}
