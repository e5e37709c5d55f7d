//! Declarative pipeline configuration: one JSON file with per-stage
//! sections, dotted-path `--set` overrides, and a canonical hash stamped
//! into every stage manifest so resumed or downstream stages can verify
//! they are reading artifacts produced under the same settings.

use crate::error::{CliError, CliResult};
use fixfit::bold::BoldConfig;
use fixfit::lb::LbFixedParams;
use fixfit::nn::{AdamConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Kepler,
    LarterBreakspear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub pipeline: Pipeline,
    /// Master seed; every stage derives its own streams from it.
    #[serde(default)]
    pub seed: u64,
    /// Workdir fallback; the --workdir flag and FIXFIT_WORKDIR take priority.
    /// Excluded from the config hash so artifact trees are relocatable.
    #[serde(default)]
    pub workdir: Option<PathBuf>,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub kepler: KeplerSection,
    #[serde(default)]
    pub lb: LbSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub sensitivity: SensitivitySection,
    #[serde(default)]
    pub fit: FitSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    /// Sobol points drawn before filtering.
    pub n_raw: usize,
    /// Points skipped from the start of the sequence.
    pub skip: u64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection { n_raw: 4096, skip: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeplerSection {
    pub n_theta: usize,
    pub e_min: f64,
    pub e_max: f64,
    pub g: f64,
}

impl Default for KeplerSection {
    fn default() -> Self {
        let d = fixfit::dataset::KeplerDatasetConfig::default();
        KeplerSection { n_theta: d.n_theta, e_min: d.e_min, e_max: d.e_max, g: d.g }
    }
}

/// Which free-parameter box the brain-network sampler draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbSpaceChoice {
    /// The published sampling ranges.
    Full,
    /// The oscillatory upper corner, for small benchmark runs.
    Excitable,
}

/// How to obtain the structural connectivity matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConnectivitySpec {
    /// Distance-decay weights exp(-|i-j| / (n/4)).
    Exponential { n: usize },
    /// Disconnected blocks of `block_size` regions with unit weights.
    Modular { n: usize, block_size: usize },
    /// N x N decimal CSV matrix, resolved relative to the config file.
    Csv { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LbSection {
    pub duration_ms: f64,
    pub dt_ms: f64,
    /// Keep every k-th integration step for post-processing.
    pub record_every: usize,
    pub amp_threshold: f64,
    pub mean_fc_max: f64,
    pub space: LbSpaceChoice,
    pub connectivity: ConnectivitySpec,
    pub bold: BoldConfig,
    /// The 19 fixed physiological constants.
    pub fixed: LbFixedParams,
}

impl Default for LbSection {
    fn default() -> Self {
        let d = fixfit::dataset::LbDatasetConfig::default();
        LbSection {
            duration_ms: d.duration_ms,
            dt_ms: d.dt_ms,
            record_every: d.record_every,
            amp_threshold: d.amp_threshold,
            mean_fc_max: d.mean_fc_max,
            space: LbSpaceChoice::Full,
            connectivity: ConnectivitySpec::Exponential { n: 8 },
            bold: d.bold,
            fixed: d.fixed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub adam: AdamConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            patience: d.patience,
            adam: d.adam,
        }
    }
}

impl TrainSection {
    /// The per-replicate seed is derived later from the master seed, so the
    /// seed here is a placeholder.
    pub fn to_train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            adam: self.adam,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Bottleneck widths to compare.
    pub ks: Vec<usize>,
    pub replicates: usize,
    pub alpha: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { ks: vec![1, 2, 3, 4], replicates: 5, alpha: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivitySection {
    /// Polynomial degree of the one-dimensional expansion.
    pub degree: usize,
    /// Weight file relative to the workdir; defaults to the best replicate
    /// of the sweep's selected k.
    pub weights: Option<String>,
}

impl Default for SensitivitySection {
    fn default() -> Self {
        SensitivitySection { degree: fixfit::scsa::DEFAULT_DEGREE, weights: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub n_hops: usize,
    /// Proposal displacement as a fraction of the unit cube.
    pub step_size: f64,
    /// Metropolis temperature; derived from the initial objective if absent.
    pub temperature: Option<f64>,
    /// Weight file relative to the workdir; defaults to the sweep's best.
    pub weights: Option<String>,
    /// Overrides the master seed for the hop stream when set.
    pub seed: Option<u64>,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection { n_hops: 100, step_size: 0.2, temperature: None, weights: None, seed: None }
    }
}

/// A parsed configuration plus the canonical hash of its effective JSON
/// (file contents with overrides applied, workdir excluded).
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub hash: String,
    /// Directory of the config file, for resolving relative data paths.
    pub base_dir: PathBuf,
}

pub fn load_config(path: &Path, sets: &[String]) -> CliResult<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("config {} is not valid JSON: {e}", path.display())))?;
    for spec in sets {
        apply_set(&mut value, spec)?;
    }
    let hash = hash_config_value(&value);
    let config: PipelineConfig = serde_json::from_value(value)
        .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
    validate(&config)?;
    let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    Ok(LoadedConfig { config, hash, base_dir })
}

/// Apply one `section.key=value` override. The value is parsed as JSON when
/// possible and treated as a bare string otherwise.
fn apply_set(root: &mut serde_json::Value, spec: &str) -> CliResult<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("--set needs section.key=value, got {spec:?}")))?;
    if path.is_empty() {
        return Err(CliError::config(format!("--set has an empty key path: {spec:?}")));
    }
    let parsed: serde_json::Value =
        serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        if let Ok(index) = seg.parse::<usize>() {
            let arr = cursor.as_array_mut().ok_or_else(|| {
                CliError::config(format!("--set {spec:?}: segment {seg:?} indexes a non-array"))
            })?;
            if index >= arr.len() {
                return Err(CliError::config(format!(
                    "--set {spec:?}: index {index} out of bounds (len {})",
                    arr.len()
                )));
            }
            if last {
                arr[index] = parsed;
                return Ok(());
            }
            cursor = &mut arr[index];
        } else {
            let obj = cursor.as_object_mut().ok_or_else(|| {
                CliError::config(format!("--set {spec:?}: segment {seg:?} descends into a non-object"))
            })?;
            if last {
                obj.insert(seg.to_string(), parsed);
                return Ok(());
            }
            cursor = obj
                .entry(seg.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default()));
        }
    }
    Ok(())
}

/// Canonical hash of the effective config. serde_json orders object keys,
/// so equal configs hash equally regardless of key order in the file. The
/// workdir is excluded: the same logical run in two directories must
/// produce byte-identical artifacts.
pub fn hash_config_value(value: &serde_json::Value) -> String {
    let mut canonical = value.clone();
    if let Some(obj) = canonical.as_object_mut() {
        obj.remove("workdir");
    }
    let text = canonical.to_string();
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn validate(cfg: &PipelineConfig) -> CliResult<()> {
    if cfg.sampling.n_raw == 0 {
        return Err(CliError::config("sampling.n_raw must be at least 1"));
    }
    if cfg.sweep.ks.is_empty() {
        return Err(CliError::config("sweep.ks must name at least one bottleneck width"));
    }
    if cfg.sweep.replicates == 0 {
        return Err(CliError::config("sweep.replicates must be at least 1"));
    }
    if !(0.0 < cfg.sweep.alpha && cfg.sweep.alpha < 1.0) {
        return Err(CliError::config(format!(
            "sweep.alpha must lie in (0,1), got {}",
            cfg.sweep.alpha
        )));
    }
    if !(cfg.kepler.e_min < cfg.kepler.e_max) {
        return Err(CliError::config(format!(
            "kepler.e_min ({}) must be below kepler.e_max ({})",
            cfg.kepler.e_min, cfg.kepler.e_max
        )));
    }
    if cfg.fit.step_size <= 0.0 || cfg.fit.step_size > 1.0 {
        return Err(CliError::config(format!(
            "fit.step_size must lie in (0,1], got {}",
            cfg.fit.step_size
        )));
    }
    if cfg.sensitivity.degree == 0 {
        return Err(CliError::config("sensitivity.degree must be at least 1"));
    }
    cfg.lb
        .fixed
        .validate()
        .map_err(|e| CliError::config(format!("lb.fixed: {e}")))?;
    cfg.lb
        .bold
        .validate()
        .map_err(|e| CliError::config(format!("lb.bold: {e}")))?;
    cfg.train
        .to_train_config()
        .validate()
        .map_err(|e| CliError::config(format!("train: {e}")))?;
    Ok(())
}

impl PipelineConfig {
    /// Build the generation config for the orbit pipeline.
    pub fn kepler_dataset_config(&self) -> fixfit::dataset::KeplerDatasetConfig {
        fixfit::dataset::KeplerDatasetConfig {
            n_theta: self.kepler.n_theta,
            e_min: self.kepler.e_min,
            e_max: self.kepler.e_max,
            g: self.kepler.g,
            skip: self.sampling.skip,
        }
    }

    /// Build the generation config for the brain-network pipeline.
    pub fn lb_dataset_config(&self) -> fixfit::dataset::LbDatasetConfig {
        fixfit::dataset::LbDatasetConfig {
            fixed: self.lb.fixed,
            duration_ms: self.lb.duration_ms,
            dt_ms: self.lb.dt_ms,
            record_every: self.lb.record_every,
            seed: self.seed,
            skip: self.sampling.skip,
            amp_threshold: self.lb.amp_threshold,
            mean_fc_max: self.lb.mean_fc_max,
            bold: self.lb.bold,
        }
    }

    pub fn lb_param_space(&self) -> fixfit::params::ParamSpace {
        match self.lb.space {
            LbSpaceChoice::Full => fixfit::lb::param_space(),
            LbSpaceChoice::Excitable => fixfit::lb::param_space_excitable(),
        }
    }

    pub fn connectivity(&self, base_dir: &Path) -> CliResult<fixfit::lb::Connectivity> {
        match &self.lb.connectivity {
            ConnectivitySpec::Exponential { n } => {
                Ok(fixfit::lb::Connectivity::synthetic_exponential(*n)?)
            }
            ConnectivitySpec::Modular { n, block_size } => {
                Ok(fixfit::lb::Connectivity::synthetic_modular(*n, *block_size)?)
            }
            ConnectivitySpec::Csv { path } => {
                let resolved = base_dir.join(path);
                Ok(fixfit::lb::Connectivity::from_csv_file(&resolved)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("config.json");
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), r#"{"pipeline": "kepler"}"#);
        let loaded = load_config(&path, &[]).unwrap();
        assert_eq!(loaded.config.pipeline, Pipeline::Kepler);
        assert_eq!(loaded.config.seed, 0);
        assert_eq!(loaded.config.sweep.ks, vec![1, 2, 3, 4]);
        assert_eq!(loaded.config.sampling.n_raw, 4096);
        assert_eq!(loaded.hash.len(), 64);
    }

    #[test]
    fn set_overrides_scalars_and_nested_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), r#"{"pipeline": "kepler", "seed": 3}"#);
        let sets = vec![
            "seed=9".to_string(),
            "sampling.n_raw=500".to_string(),
            "train.adam.lr=0.01".to_string(),
            "sweep.ks=[2,3]".to_string(),
        ];
        let loaded = load_config(&path, &sets).unwrap();
        assert_eq!(loaded.config.seed, 9);
        assert_eq!(loaded.config.sampling.n_raw, 500);
        assert_eq!(loaded.config.train.adam.lr, 0.01);
        assert_eq!(loaded.config.sweep.ks, vec![2, 3]);
    }

    #[test]
    fn hash_ignores_workdir_but_not_settings() {
        let dir = tempfile::tempdir().unwrap();
        let a = load_config(
            &write_config(dir.path(), r#"{"pipeline": "kepler", "workdir": "/tmp/a"}"#),
            &[],
        )
        .unwrap();
        let b = load_config(
            &write_config(dir.path(), r#"{"workdir": "/somewhere/else", "pipeline": "kepler"}"#),
            &[],
        )
        .unwrap();
        assert_eq!(a.hash, b.hash);
        let c = load_config(&write_config(dir.path(), r#"{"pipeline": "kepler", "seed": 1}"#), &[])
            .unwrap();
        assert_ne!(a.hash, c.hash);
    }

    #[test]
    fn set_override_changes_the_hash() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), r#"{"pipeline": "kepler"}"#);
        let plain = load_config(&path, &[]).unwrap();
        let tweaked = load_config(&path, &["seed=5".to_string()]).unwrap();
        assert_ne!(plain.hash, tweaked.hash);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), r#"{"pipeline": "kepler", "typo_section": 1}"#);
        let err = load_config(&path, &[]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), r#"{"pipeline": "kepler"}"#);
        for bad in ["sampling.n_raw=0", "sweep.alpha=2.0", "sweep.ks=[]", "fit.step_size=0"] {
            let err = load_config(&path, &[bad.to_string()]).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad} should be a config error");
        }
    }

    #[test]
    fn lb_sections_build_core_configs() {
        let dir = tempfile::tempdir().unwrap();
        // Partial subsections fill from the canonical defaults.
        let body = r#"{
            "pipeline": "larter_breakspear",
            "seed": 4,
            "lb": {
                "duration_ms": 120000.0,
                "dt_ms": 0.5,
                "record_every": 2,
                "space": "excitable",
                "connectivity": {"kind": "modular", "n": 8, "block_size": 2},
                "bold": {"transient_discard": 40.0}
            }
        }"#;
        let path = write_config(dir.path(), body);
        let loaded = load_config(&path, &[]).unwrap();
        let core = loaded.config.lb_dataset_config();
        assert_eq!(core.seed, 4);
        assert_eq!(core.dt_ms, 0.5);
        assert_eq!(core.bold.transient_discard, 40.0);
        assert_eq!(core.bold.tr, BoldConfig::default().tr);
        let conn = loaded.config.connectivity(&loaded.base_dir).unwrap();
        assert_eq!(conn.region_count(), 8);
        let space = loaded.config.lb_param_space();
        assert!(space.specs[0].lower > 0.2);
    }

    #[test]
    fn csv_connectivity_resolves_relative_to_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let conn = fixfit::lb::Connectivity::synthetic_exponential(4).unwrap();
        std::fs::write(dir.path().join("conn.csv"), conn.to_csv_string()).unwrap();
        let body = r#"{
            "pipeline": "larter_breakspear",
            "lb": {"connectivity": {"kind": "csv", "path": "conn.csv"}}
        }"#;
        let path = write_config(dir.path(), body);
        let loaded = load_config(&path, &[]).unwrap();
        let parsed = loaded.config.connectivity(&loaded.base_dir).unwrap();
        assert_eq!(parsed, conn);
    }
}
