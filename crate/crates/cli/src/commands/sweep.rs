//! The `sweep` subcommand: replicated training across bottleneck widths,
//! selection of the minimal adequate width, and the sweep report artifacts.
//!
//! Every (k, replicate) pair owns a weight file plus a sidecar with its
//! training history. A rerun reuses pairs whose files are complete and
//! trains only the missing ones, so an interrupted sweep resumes instead of
//! restarting.

use super::{error_vs_k_svg, failure_name, sidecar_name, ReplicateSidecar};
use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use crate::stages::{self, STAGE_MANIFEST, SWEEP_DIR};
use fixfit::dataset::Dataset;
use fixfit::nn::{Mlp, MlpSpec};
use fixfit::sweep::{
    finalize_stats, train_replicate_full, write_sweep_csv, write_sweep_json, SweepConfig,
    SweepFailure, SweepResult,
};
use rayon::prelude::*;
use std::path::Path;

enum Outcome {
    Done(fixfit::sweep::ReplicateRecord),
    Failed(SweepFailure),
}

pub fn cmd_sweep(loaded: &LoadedConfig, workdir: &Path) -> CliResult<()> {
    let cfg = &loaded.config;
    let ds = super::load_dataset_stage(workdir)?;
    let dir = stages::prepare_stage(workdir, SWEEP_DIR, STAGE_MANIFEST, &loaded.hash)?;
    let base_spec = super::base_spec(loaded, &ds)?;
    let cap = base_spec.input_dim().min(base_spec.output_dim());
    for &k in &cfg.sweep.ks {
        if k == 0 || k > cap {
            return Err(CliError::config(format!(
                "sweep.ks entry {k} must lie in 1..={cap} for this architecture"
            )));
        }
    }
    let sweep_cfg = SweepConfig {
        master_seed: cfg.seed,
        alpha: cfg.sweep.alpha,
        train: cfg.train.to_train_config(),
    };

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut pending: Vec<(usize, usize)> = Vec::new();
    for &k in &cfg.sweep.ks {
        for r in 0..cfg.sweep.replicates {
            match try_reuse(&dir, k, r) {
                Some(Outcome::Done(rec)) => records.push(rec),
                Some(Outcome::Failed(f)) => failures.push(f),
                None => pending.push((k, r)),
            }
        }
    }
    let reused = records.len() + failures.len();
    if reused > 0 {
        println!("sweep: reusing {reused} completed replicates, training {}", pending.len());
    }

    let outcomes: Vec<CliResult<Outcome>> = pending
        .par_iter()
        .map(|&(k, r)| run_one(&ds, &base_spec, k, r, &sweep_cfg, &dir))
        .collect();
    for outcome in outcomes {
        match outcome? {
            Outcome::Done(rec) => records.push(rec),
            Outcome::Failed(f) => failures.push(f),
        }
    }
    records.sort_by_key(|r| (r.k, r.replicate));
    failures.sort_by_key(|f| (f.k, f.replicate));

    let errors: Vec<Vec<f64>> = cfg
        .sweep
        .ks
        .iter()
        .map(|&k| records.iter().filter(|r| r.k == k).map(|r| r.val_mse).collect())
        .collect();
    for (i, errs) in errors.iter().enumerate() {
        if errs.is_empty() {
            return Err(CliError::Numeric(format!(
                "every replicate at k={} failed to train",
                cfg.sweep.ks[i]
            )));
        }
    }
    let mut result = SweepResult {
        k_values: cfg.sweep.ks.clone(),
        errors,
        means: Vec::new(),
        std_errors: Vec::new(),
        p_values: Vec::new(),
        selected_k: 0,
        alpha: cfg.sweep.alpha,
        records,
        failures,
    };
    finalize_stats(&mut result)?;

    write_sweep_json(&result, &dir.join("sweep.json"))?;
    write_sweep_csv(&result, &dir.join("sweep.csv"))?;
    super::write_text(&dir.join("error_vs_k.svg"), &error_vs_k_svg(&result))?;

    for (i, &k) in result.k_values.iter().enumerate() {
        println!(
            "sweep: k={k} mean val MSE {:.6e} (se {:.2e}, p {:.4}, {} replicates)",
            result.means[i],
            result.std_errors[i],
            result.p_values[i],
            result.errors[i].len()
        );
    }
    println!("sweep: selected k* = {} at alpha = {}", result.selected_k, result.alpha);
    Ok(())
}

/// Reuse one completed replicate if its artifacts are whole: a parsable
/// sidecar whose weight file loads, or a recorded failure.
fn try_reuse(dir: &Path, k: usize, r: usize) -> Option<Outcome> {
    let sidecar_path = dir.join(sidecar_name(k, r));
    if sidecar_path.exists() {
        if let Ok(sc) = stages::read_json::<ReplicateSidecar>(&sidecar_path) {
            if sc.record.k == k
                && sc.record.replicate == r
                && Mlp::load_weights(&dir.join(&sc.record.weight_file)).is_ok()
            {
                return Some(Outcome::Done(sc.record));
            }
        }
    }
    let failure_path = dir.join(failure_name(k, r));
    if failure_path.exists() {
        if let Ok(f) = stages::read_json::<SweepFailure>(&failure_path) {
            if f.k == k && f.replicate == r {
                return Some(Outcome::Failed(f));
            }
        }
    }
    None
}

fn run_one(
    ds: &Dataset,
    base_spec: &MlpSpec,
    k: usize,
    r: usize,
    cfg: &SweepConfig,
    dir: &Path,
) -> CliResult<Outcome> {
    match train_replicate_full(ds, base_spec, k, r, cfg) {
        Ok((rec, trained)) => {
            trained.best_weights.save_weights(&dir.join(&rec.weight_file))?;
            let sidecar = ReplicateSidecar {
                record: rec.clone(),
                train_curve: trained.train_mse,
                val_curve: trained.val_mse,
            };
            stages::write_json(&dir.join(sidecar_name(k, r)), &sidecar)?;
            Ok(Outcome::Done(rec))
        }
        Err(diverged @ fixfit::Error::TrainingDiverged { .. }) => {
            let failure = SweepFailure {
                k,
                replicate: r,
                seed: fixfit::sweep::replicate_seed(cfg.master_seed, k, r),
                reason: diverged.to_string(),
            };
            stages::write_json(&dir.join(failure_name(k, r)), &failure)?;
            Ok(Outcome::Failed(failure))
        }
        Err(e) => Err(e.into()),
    }
}
