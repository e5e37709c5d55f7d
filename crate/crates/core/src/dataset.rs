//! Quasi-random dataset generation, rejection filtering, output transforms,
//! train/validation splitting, and on-disk persistence.
//!
//! A dataset directory holds `manifest.json` plus two flat row-major
//! little-endian f64 arrays, `X.f64` and `Y.f64`. Inputs are stored as
//! unit-cube Sobol coordinates of the free parameters; the manifest's
//! parameter specs carry the affine map back to native values.

use crate::bold::{bold_fc, BoldConfig};
use crate::error::{Error, Result};
use crate::kepler::{kepler_orbit, kepler_shape, KeplerParams, DEFAULT_G};
use crate::lb::{is_oscillatory, lb_simulate_recorded, Connectivity, LbFixedParams, LbInit, LbParams};
use crate::params::{ParamSpace, ParamSpec};
use crate::rng::{derive_seed, stream};
use crate::sobol::sobol_points;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Affine (optionally log-first) map applied to raw simulator outputs.
/// The identity is `{log: false, min: 0, max: 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputTransform {
    pub log: bool,
    pub min: f64,
    pub max: f64,
}

impl OutputTransform {
    pub fn identity() -> Self {
        OutputTransform { log: false, min: 0.0, max: 1.0 }
    }

    pub fn is_identity(&self) -> bool {
        !self.log && self.min == 0.0 && self.max == 1.0
    }

    /// Apply to raw values: optional natural log, then (x - min)/(max - min).
    pub fn apply(&self, raw: &[f64]) -> Result<Vec<f64>> {
        let span = self.max - self.min;
        if !(span > 0.0) {
            return Err(Error::invalid(format!(
                "transform span must be positive, got [{}, {}]",
                self.min, self.max
            )));
        }
        raw.iter()
            .map(|&x| {
                let v = if self.log {
                    if x <= 0.0 {
                        return Err(Error::invalid(format!("log transform needs positive values, got {x}")));
                    }
                    x.ln()
                } else {
                    x
                };
                Ok((v - self.min) / span)
            })
            .collect()
    }

    /// Inverse of `apply`.
    pub fn invert(&self, scaled: &[f64]) -> Vec<f64> {
        let span = self.max - self.min;
        scaled
            .iter()
            .map(|&y| {
                let v = self.min + y * span;
                if self.log {
                    v.exp()
                } else {
                    v
                }
            })
            .collect()
    }
}

/// Where the samples came from and what the filters did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub skip: u64,
    pub n_raw: usize,
    pub retained: usize,
    /// Rejection counts keyed by reason, e.g. "eccentricity", "divergence".
    pub rejected: BTreeMap<String, usize>,
}

impl Provenance {
    pub fn rejected_total(&self) -> usize {
        self.rejected.values().sum()
    }
}

/// Filtered sample matrices with a deterministic train/validation split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Unit-cube inputs, one row per retained sample.
    pub x: Array2<f64>,
    /// Transformed outputs, one row per retained sample.
    pub y: Array2<f64>,
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub transform: OutputTransform,
    pub space: ParamSpace,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.y.ncols()
    }

    fn gather(m: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((idx.len(), m.ncols()));
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).assign(&m.row(i));
        }
        out
    }

    pub fn train_xy(&self) -> (Array2<f64>, Array2<f64>) {
        (Self::gather(&self.x, &self.train_idx), Self::gather(&self.y, &self.train_idx))
    }

    pub fn val_xy(&self) -> (Array2<f64>, Array2<f64>) {
        (Self::gather(&self.x, &self.val_idx), Self::gather(&self.y, &self.val_idx))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.y.nrows() != n {
            return Err(Error::ShapeMismatch(format!(
                "X has {n} rows but Y has {}",
                self.y.nrows()
            )));
        }
        if self.x.ncols() != self.space.dim() {
            return Err(Error::ShapeMismatch(format!(
                "X has {} columns but the space has {} free parameters",
                self.x.ncols(),
                self.space.dim()
            )));
        }
        let mut seen = vec![false; n];
        for &i in self.train_idx.iter().chain(self.val_idx.iter()) {
            if i >= n || seen[i] {
                return Err(Error::invalid(format!("split index {i} out of range or repeated")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::invalid("split does not cover every sample"));
        }
        if self.x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::invalid("X entries must lie in [0,1]"));
        }
        Ok(())
    }
}

/// Deterministic 1-in-10 split: every 10th retained sample (indices 9, 19,
/// ...) goes to validation, the rest to training.
pub fn split_indices(n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::with_capacity(n - n / 10);
    let mut val = Vec::with_capacity(n / 10);
    for i in 0..n {
        if (i + 1) % 10 == 0 {
            val.push(i);
        } else {
            train.push(i);
        }
    }
    (train, val)
}

/// The four orbit parameters, each free over [0.1, 1].
pub fn kepler_param_space() -> ParamSpace {
    ParamSpace::new(vec![
        ParamSpec::free("m1", 0.1, 1.0),
        ParamSpec::free("m2", 0.1, 1.0),
        ParamSpec::free("r0", 0.1, 1.0),
        ParamSpec::free("omega0", 0.1, 1.0),
    ])
    .expect("static space is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeplerDatasetConfig {
    /// Points per orbit curve.
    pub n_theta: usize,
    /// Retain samples with e_min <= e <= e_max.
    pub e_min: f64,
    pub e_max: f64,
    /// Gravitational constant.
    pub g: f64,
    /// Sobol points skipped from the start of the sequence.
    pub skip: u64,
}

impl Default for KeplerDatasetConfig {
    fn default() -> Self {
        KeplerDatasetConfig { n_theta: 100, e_min: 0.7, e_max: 0.95, g: DEFAULT_G, skip: 1 }
    }
}

/// Closed-form eccentricity filter used by `generate_kepler`.
pub fn kepler_accepts(params: &KeplerParams, cfg: &KeplerDatasetConfig) -> Result<bool> {
    let (e, _l) = kepler_shape(params)?;
    Ok(cfg.e_min <= e && e <= cfg.e_max)
}

/// Sobol-sample orbit parameters, filter on eccentricity, log the radii, and
/// min-max scale the full output set to [0,1] with one global affine map.
pub fn generate_kepler(space: &ParamSpace, n_raw: usize, cfg: &KeplerDatasetConfig) -> Result<Dataset> {
    if space.dim() != 4 {
        return Err(Error::ShapeMismatch(format!(
            "kepler generation expects 4 free parameters, got {}",
            space.dim()
        )));
    }
    if n_raw == 0 {
        return Err(Error::invalid("n_raw must be at least 1"));
    }
    let points = sobol_points(space.dim(), n_raw, cfg.skip)?;
    let mut kept_units: Vec<Vec<f64>> = Vec::new();
    let mut kept_logs: Vec<Vec<f64>> = Vec::new();
    let mut rejected_ecc = 0usize;
    for row in points.rows() {
        let unit: Vec<f64> = row.to_vec();
        let native = space.scale(&unit)?;
        let params = KeplerParams::new(native[0], native[1], native[2], native[3], cfg.g)?;
        if !kepler_accepts(&params, cfg)? {
            rejected_ecc += 1;
            continue;
        }
        let orbit = kepler_orbit(&params, cfg.n_theta)?;
        kept_units.push(unit);
        kept_logs.push(orbit.radii.iter().map(|&r| r.ln()).collect());
    }
    if kept_units.is_empty() {
        return Err(Error::FilterExhausted {
            n_raw,
            detail: "every sample failed the eccentricity filter".into(),
        });
    }
    let (mut gmin, mut gmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in &kept_logs {
        for &v in row {
            gmin = gmin.min(v);
            gmax = gmax.max(v);
        }
    }
    if !(gmax > gmin) {
        return Err(Error::invalid("all outputs identical; min-max scaling undefined"));
    }
    let transform = OutputTransform { log: true, min: gmin, max: gmax };
    let span = gmax - gmin;
    let n = kept_units.len();
    let o = cfg.n_theta;
    let mut x = Array2::zeros((n, 4));
    let mut y = Array2::zeros((n, o));
    for (i, (unit, logs)) in kept_units.iter().zip(&kept_logs).enumerate() {
        for (j, &u) in unit.iter().enumerate() {
            x[[i, j]] = u;
        }
        for (j, &v) in logs.iter().enumerate() {
            y[[i, j]] = (v - gmin) / span;
        }
    }
    let (train_idx, val_idx) = split_indices(n);
    let mut rejected = BTreeMap::new();
    if rejected_ecc > 0 {
        rejected.insert("eccentricity".to_string(), rejected_ecc);
    }
    Ok(Dataset {
        x,
        y,
        train_idx,
        val_idx,
        transform,
        space: space.clone(),
        provenance: Provenance { seed: 0, skip: cfg.skip, n_raw, retained: n, rejected },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbDatasetConfig {
    pub fixed: LbFixedParams,
    pub duration_ms: f64,
    pub dt_ms: f64,
    /// Keep every k-th integration step for post-processing.
    pub record_every: usize,
    /// Master seed for per-sample initial conditions.
    pub seed: u64,
    pub skip: u64,
    /// Mean V amplitude a retained sample must exceed.
    pub amp_threshold: f64,
    /// Mean FC above this is rejected.
    pub mean_fc_max: f64,
    pub bold: BoldConfig,
}

impl Default for LbDatasetConfig {
    fn default() -> Self {
        LbDatasetConfig {
            fixed: LbFixedParams::reference(),
            duration_ms: 300_000.0,
            dt_ms: 0.1,
            record_every: 10,
            seed: 0,
            skip: 1,
            amp_threshold: 0.05,
            mean_fc_max: 0.3,
            bold: BoldConfig::default(),
        }
    }
}

enum LbOutcome {
    Retained(Vec<f64>, Vec<f64>),
    Rejected(&'static str),
}

fn lb_sample(
    unit: &[f64],
    index: usize,
    space: &ParamSpace,
    conn: &Connectivity,
    cfg: &LbDatasetConfig,
) -> Result<LbOutcome> {
    let native = space.scale(unit)?;
    let params = LbParams::from_free(&cfg.fixed, &native)?;
    let init_seed = derive_seed(cfg.seed, &[stream::LB_INIT, index as u64]);
    let ts = match lb_simulate_recorded(
        &params,
        conn,
        cfg.duration_ms,
        cfg.dt_ms,
        cfg.record_every,
        &LbInit::Seed(init_seed),
    ) {
        Ok(ts) => ts,
        Err(Error::Divergence { .. }) => return Ok(LbOutcome::Rejected("divergence")),
        Err(e) => return Err(e),
    };
    let tail = ts.discard_initial(cfg.bold.transient_discard * 1000.0)?;
    if !is_oscillatory(&tail, cfg.amp_threshold) {
        return Ok(LbOutcome::Rejected("non_oscillatory"));
    }
    let (fc, flat) = match bold_fc(&ts, &cfg.bold) {
        Ok(pair) => pair,
        Err(Error::Divergence { .. }) => return Ok(LbOutcome::Rejected("divergence")),
        Err(Error::UndefinedCorrelation { .. }) => {
            return Ok(LbOutcome::Rejected("undefined_correlation"))
        }
        Err(e) => return Err(e),
    };
    if fc.mean_fc() > cfg.mean_fc_max {
        return Ok(LbOutcome::Rejected("mean_fc"));
    }
    Ok(LbOutcome::Retained(unit.to_vec(), flat))
}

/// Sobol-sample the free neural parameters, simulate each sample, convert to
/// BOLD functional connectivity, and keep oscillatory samples with mean FC at
/// or below the cutoff. Outputs are the strict upper triangle of the FC
/// matrix, stored without rescaling.
pub fn generate_lb(
    space: &ParamSpace,
    n_raw: usize,
    conn: &Connectivity,
    cfg: &LbDatasetConfig,
) -> Result<Dataset> {
    if n_raw == 0 {
        return Err(Error::invalid("n_raw must be at least 1"));
    }
    let points = sobol_points(space.dim(), n_raw, cfg.skip)?;
    let units: Vec<Vec<f64>> = points.rows().into_iter().map(|r| r.to_vec()).collect();
    // Parallel over samples; the indexed collect keeps results in sample
    // order so the reduction below is deterministic for any thread count.
    let outcomes: Vec<Result<LbOutcome>> = units
        .par_iter()
        .enumerate()
        .map(|(i, unit)| lb_sample(unit, i, space, conn, cfg))
        .collect();
    let mut kept_units: Vec<Vec<f64>> = Vec::new();
    let mut kept_flats: Vec<Vec<f64>> = Vec::new();
    let mut rejected: BTreeMap<String, usize> = BTreeMap::new();
    for outcome in outcomes {
        match outcome? {
            LbOutcome::Retained(unit, flat) => {
                kept_units.push(unit);
                kept_flats.push(flat);
            }
            LbOutcome::Rejected(reason) => {
                *rejected.entry(reason.to_string()).or_insert(0) += 1;
            }
        }
    }
    if kept_units.is_empty() {
        return Err(Error::FilterExhausted {
            n_raw,
            detail: "every sample failed the oscillation or FC filters".into(),
        });
    }
    let n = kept_units.len();
    let o = kept_flats[0].len();
    let i_dim = space.dim();
    let mut x = Array2::zeros((n, i_dim));
    let mut y = Array2::zeros((n, o));
    for (i, (unit, flat)) in kept_units.iter().zip(&kept_flats).enumerate() {
        for (j, &u) in unit.iter().enumerate() {
            x[[i, j]] = u;
        }
        for (j, &v) in flat.iter().enumerate() {
            y[[i, j]] = v;
        }
    }
    let (train_idx, val_idx) = split_indices(n);
    Ok(Dataset {
        x,
        y,
        train_idx,
        val_idx,
        transform: OutputTransform::identity(),
        space: space.clone(),
        provenance: Provenance { seed: cfg.seed, skip: cfg.skip, n_raw, retained: n, rejected },
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetManifest {
    format_version: u32,
    n_total: usize,
    input_dim: usize,
    output_dim: usize,
    specs: ParamSpace,
    transform: OutputTransform,
    train_idx: Vec<usize>,
    val_idx: Vec<usize>,
    provenance: Provenance,
}

fn write_f64_file(path: &Path, data: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for &v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_f64_file(path: &Path, expected_len: usize) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected_len * 8 {
        return Err(Error::ShapeMismatch(format!(
            "{} holds {} bytes, expected {} ({} f64 values)",
            path.display(),
            bytes.len(),
            expected_len * 8,
            expected_len
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Persist a dataset as `manifest.json` + `X.f64` + `Y.f64` under `dir`.
pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    ds.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION,
        n_total: ds.len(),
        input_dim: ds.input_dim(),
        output_dim: ds.output_dim(),
        specs: ds.space.clone(),
        transform: ds.transform,
        train_idx: ds.train_idx.clone(),
        val_idx: ds.val_idx.clone(),
        provenance: ds.provenance.clone(),
    };
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&manifest_path, e))?;
    std::fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
    write_f64_file(&dir.join("X.f64"), ds.x.as_slice().expect("row-major"))?;
    write_f64_file(&dir.join("Y.f64"), ds.y.as_slice().expect("row-major"))?;
    Ok(())
}

/// Load a dataset saved by `save_dataset`, checking shapes against the
/// manifest.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join("manifest.json");
    let json = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&json).map_err(|e| Error::json(&manifest_path, e))?;
    if manifest.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::Artifact(format!(
            "unsupported dataset format version {}",
            manifest.format_version
        )));
    }
    let x_flat = read_f64_file(&dir.join("X.f64"), manifest.n_total * manifest.input_dim)?;
    let y_flat = read_f64_file(&dir.join("Y.f64"), manifest.n_total * manifest.output_dim)?;
    let x = Array2::from_shape_vec((manifest.n_total, manifest.input_dim), x_flat)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let y = Array2::from_shape_vec((manifest.n_total, manifest.output_dim), y_flat)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let ds = Dataset {
        x,
        y,
        train_idx: manifest.train_idx,
        val_idx: manifest.val_idx,
        transform: manifest.transform,
        space: manifest.specs,
        provenance: manifest.provenance,
    };
    ds.validate()?;
    Ok(ds)
}
