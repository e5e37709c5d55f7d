//! Replicated training across bottleneck widths and statistical selection of
//! the minimal adequate latent dimension k*.
//!
//! Each (k, replicate) pair trains an independent model from a seed derived
//! from the master seed, so the sweep is reproducible and embarrassingly
//! parallel. Selection compares each k's replicate errors against the
//! best-mean k with a two-sided Welch's t-test: k* is the smallest k whose
//! errors are statistically indistinguishable from the minimum.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::{train_on_dataset, Mlp, MlpSpec, TrainConfig};
use crate::rng::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub master_seed: u64,
    pub alpha: f64,
    pub train: TrainConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { master_seed: 0, alpha: 0.05, train: TrainConfig::default() }
    }
}

/// One successful replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub k: usize,
    pub replicate: usize,
    pub seed: u64,
    pub val_mse: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    /// File the CLI stores this replicate's best weights under.
    pub weight_file: String,
}

/// One diverged replicate, kept for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub k: usize,
    pub replicate: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub k_values: Vec<usize>,
    /// Successful replicate validation errors, one list per k.
    pub errors: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Two-sided Welch p-values of each k against the best-mean k.
    pub p_values: Vec<f64>,
    pub selected_k: usize,
    pub alpha: f64,
    pub records: Vec<ReplicateRecord>,
    pub failures: Vec<SweepFailure>,
}

/// Seed for one (k, replicate) training, derived from the master seed.
pub fn replicate_seed(master_seed: u64, k: usize, replicate: usize) -> u64 {
    derive_seed(master_seed, &[k as u64, replicate as u64])
}

/// Canonical weight-file name for a replicate.
pub fn weight_file_name(k: usize, replicate: usize) -> String {
    format!("weights_k{k}_r{replicate}.json")
}

/// Train one (k, replicate) model and return the record plus the full
/// training history (per-epoch losses and the best weights). Divergence
/// comes back as the error.
pub fn train_replicate_full(
    ds: &Dataset,
    base_spec: &MlpSpec,
    k: usize,
    replicate: usize,
    cfg: &SweepConfig,
) -> Result<(ReplicateRecord, crate::nn::TrainRecord)> {
    let spec = base_spec.with_bottleneck(k)?;
    let seed = replicate_seed(cfg.master_seed, k, replicate);
    let init_seed = derive_seed(seed, &[crate::rng::stream::INIT_WEIGHTS]);
    let model = Mlp::init(spec, init_seed)?;
    let train_cfg = TrainConfig { seed, ..cfg.train };
    let record = train_on_dataset(model, ds, &train_cfg)?;
    Ok((
        ReplicateRecord {
            k,
            replicate,
            seed,
            val_mse: record.best_val_mse,
            best_epoch: record.best_epoch,
            epochs_run: record.epochs_run(),
            weight_file: weight_file_name(k, replicate),
        },
        record,
    ))
}

/// Train one (k, replicate) model and return the record plus the best
/// weights. Divergence comes back as the error.
pub fn train_replicate(
    ds: &Dataset,
    base_spec: &MlpSpec,
    k: usize,
    replicate: usize,
    cfg: &SweepConfig,
) -> Result<(ReplicateRecord, Mlp)> {
    let (rec, record) = train_replicate_full(ds, base_spec, k, replicate, cfg)?;
    Ok((rec, record.best_weights))
}

fn check_k_values(base_spec: &MlpSpec, k_values: &[usize]) -> Result<()> {
    if k_values.is_empty() {
        return Err(Error::invalid("k_values must be non-empty"));
    }
    let cap = base_spec.input_dim().min(base_spec.output_dim());
    for &k in k_values {
        if k == 0 || k > cap {
            return Err(Error::invalid(format!(
                "bottleneck width {k} must lie in 1..={cap} for this architecture"
            )));
        }
    }
    Ok(())
}

/// Run the full sweep. Returns the result and the best weights of each
/// successful replicate, aligned with `result.records`.
pub fn run_sweep(
    ds: &Dataset,
    base_spec: &MlpSpec,
    k_values: &[usize],
    replicates: usize,
    cfg: &SweepConfig,
) -> Result<(SweepResult, Vec<Mlp>)> {
    check_k_values(base_spec, k_values)?;
    if replicates == 0 {
        return Err(Error::invalid("replicates must be at least 1"));
    }
    let jobs: Vec<(usize, usize)> = k_values
        .iter()
        .flat_map(|&k| (0..replicates).map(move |r| (k, r)))
        .collect();
    let outcomes: Vec<std::result::Result<(ReplicateRecord, Mlp), (usize, usize, String)>> = jobs
        .par_iter()
        .map(|&(k, r)| {
            train_replicate(ds, base_spec, k, r, cfg).map_err(|e| (k, r, e.to_string()))
        })
        .collect();

    let mut records = Vec::new();
    let mut models = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok((rec, model)) => {
                records.push(rec);
                models.push(model);
            }
            Err((k, replicate, reason)) => failures.push(SweepFailure {
                k,
                replicate,
                seed: replicate_seed(cfg.master_seed, k, replicate),
                reason,
            }),
        }
    }

    let errors: Vec<Vec<f64>> = k_values
        .iter()
        .map(|&k| records.iter().filter(|r| r.k == k).map(|r| r.val_mse).collect())
        .collect();
    for (i, errs) in errors.iter().enumerate() {
        if errs.is_empty() {
            return Err(Error::invalid(format!(
                "every replicate at k={} failed to train",
                k_values[i]
            )));
        }
    }

    let mut result = SweepResult {
        k_values: k_values.to_vec(),
        errors,
        means: Vec::new(),
        std_errors: Vec::new(),
        p_values: Vec::new(),
        selected_k: 0,
        alpha: cfg.alpha,
        records,
        failures,
    };
    finalize_stats(&mut result)?;
    Ok((result, models))
}

/// Fill in means, standard errors, p-values against the best-mean k, and the
/// selected k*.
pub fn finalize_stats(sr: &mut SweepResult) -> Result<()> {
    if sr.k_values.len() != sr.errors.len() {
        return Err(Error::ShapeMismatch("one error list per k required".into()));
    }
    sr.means = sr
        .errors
        .iter()
        .map(|e| e.iter().sum::<f64>() / e.len() as f64)
        .collect();
    sr.std_errors = sr
        .errors
        .iter()
        .map(|e| {
            if e.len() < 2 {
                return f64::NAN;
            }
            let mean = e.iter().sum::<f64>() / e.len() as f64;
            let var = e.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (e.len() - 1) as f64;
            (var / e.len() as f64).sqrt()
        })
        .collect();
    let k_min_pos = argmin(&sr.means);
    sr.p_values = sr
        .errors
        .iter()
        .map(|e| welch_t(e, &sr.errors[k_min_pos]))
        .collect::<Result<Vec<f64>>>()?;
    sr.selected_k = select_k(sr, sr.alpha)?;
    Ok(())
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Two-sided Welch's t-test p-value for the difference in means of two
/// samples with unequal variances (Welch-Satterthwaite degrees of freedom).
pub fn welch_t(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    let (na, nb) = (sample_a.len(), sample_b.len());
    if na < 2 || nb < 2 {
        return Err(Error::invalid(format!(
            "welch test needs at least 2 values per sample, got {na} and {nb}"
        )));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let var = |s: &[f64], m: f64| s.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (s.len() - 1) as f64;
    let (ma, mb) = (mean(sample_a), mean(sample_b));
    let (va, vb) = (var(sample_a, ma), var(sample_b, mb));
    let sa = va / na as f64;
    let sb = vb / nb as f64;
    if sa + sb == 0.0 {
        // Degenerate: no variance anywhere. Identical means are
        // indistinguishable (p = 1); distinct means are a sure difference.
        return Ok(if ma == mb { 1.0 } else { 0.0 });
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb) * (sa + sb)
        / (sa * sa / (na as f64 - 1.0) + sb * sb / (nb as f64 - 1.0));
    // Two-sided p = P(|T_df| >= |t|), via the regularized incomplete beta.
    let x = df / (df + t * t);
    let p = statrs::function::beta::beta_reg(df / 2.0, 0.5, x);
    Ok(p.clamp(0.0, 1.0))
}

/// Smallest k whose replicate errors are statistically indistinguishable
/// (p >= alpha) from those of the best-mean k. The best-mean k compares to
/// itself with p = 1, so a selection always exists.
pub fn select_k(sr: &SweepResult, alpha: f64) -> Result<usize> {
    if sr.k_values.is_empty() || sr.errors.len() != sr.k_values.len() {
        return Err(Error::invalid("sweep result holds no populated error lists"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0,1], got {alpha}")));
    }
    for (i, e) in sr.errors.iter().enumerate() {
        if e.len() < 2 {
            return Err(Error::invalid(format!(
                "selection needs >= 2 replicates per k, k={} has {}",
                sr.k_values[i],
                e.len()
            )));
        }
    }
    let means: Vec<f64> = sr
        .errors
        .iter()
        .map(|e| e.iter().sum::<f64>() / e.len() as f64)
        .collect();
    let k_min_pos = argmin(&means);
    // Visit k values smallest first.
    let mut order: Vec<usize> = (0..sr.k_values.len()).collect();
    order.sort_by_key(|&i| sr.k_values[i]);
    for i in order {
        let p = welch_t(&sr.errors[i], &sr.errors[k_min_pos])?;
        if p >= alpha {
            return Ok(sr.k_values[i]);
        }
    }
    Ok(sr.k_values[k_min_pos])
}

/// CSV of successful replicates: k, replicate, val_mse, weight_file.
pub fn write_sweep_csv(sr: &SweepResult, path: &Path) -> Result<()> {
    let mut out = String::from("k,replicate,val_mse,weight_file\n");
    for r in &sr.records {
        out.push_str(&format!("{},{},{},{}\n", r.k, r.replicate, r.val_mse, r.weight_file));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Full sweep result as pretty JSON.
pub fn write_sweep_json(sr: &SweepResult, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(sr).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}
