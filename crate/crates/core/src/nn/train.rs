//! Mini-batch training loop with seeded shuffling, Adam updates, and early
//! stopping on the validation error.

use super::adam::{AdamConfig, AdamState};
use super::model::{mse, mse_cotangent, Mlp};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, derive_seed, stream};
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 256,
            max_epochs: 5000,
            patience: 200,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if self.patience >= self.max_epochs {
            return Err(Error::invalid(format!(
                "patience {} must be below max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        self.adam.validate()
    }
}

/// Tracks the running validation minimum; signals a stop once `patience`
/// consecutive epochs fail to improve it.
pub struct EarlyStopper {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        EarlyStopper { patience, best: f64::INFINITY, best_epoch: 0, since_best: 0 }
    }

    /// Record one epoch's validation error. Returns (improved, should_stop).
    pub fn observe(&mut self, epoch: usize, val: f64) -> (bool, bool) {
        let improved = val < self.best;
        if improved {
            self.best = val;
            self.best_epoch = epoch;
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        (improved, self.since_best >= self.patience)
    }

    pub fn best(&self) -> (usize, f64) {
        (self.best_epoch, self.best)
    }
}

/// Training history; epochs are numbered from 1, so `val_mse[e-1]` belongs
/// to epoch `e`.
#[derive(Debug, Clone)]
pub struct TrainRecord {
    pub train_mse: Vec<f64>,
    pub val_mse: Vec<f64>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub best_weights: Mlp,
}

impl TrainRecord {
    pub fn epochs_run(&self) -> usize {
        self.val_mse.len()
    }
}

/// Train on explicit matrices. The model argument provides the initialized
/// weights; the returned record holds the best-epoch snapshot.
pub fn train(
    mut model: Mlp,
    train_x: &Array2<f64>,
    train_y: &Array2<f64>,
    val_x: &Array2<f64>,
    val_y: &Array2<f64>,
    cfg: &TrainConfig,
) -> Result<TrainRecord> {
    cfg.validate()?;
    let n_train = train_x.nrows();
    if n_train == 0 || val_x.nrows() == 0 {
        return Err(Error::invalid("training and validation sets must be non-empty"));
    }
    if train_y.nrows() != n_train || val_y.nrows() != val_x.nrows() {
        return Err(Error::ShapeMismatch("input/target row counts differ".into()));
    }
    if train_x.ncols() != model.spec.input_dim() || train_y.ncols() != model.spec.output_dim() {
        return Err(Error::ShapeMismatch(format!(
            "dataset is {}x{} -> {}, model expects {} -> {}",
            n_train,
            train_x.ncols(),
            train_y.ncols(),
            model.spec.input_dim(),
            model.spec.output_dim()
        )));
    }

    let mut shuffle_rng = rng::seeded(derive_seed(cfg.seed, &[stream::SHUFFLE]));
    let mut params = model.params_flat();
    let mut adam = AdamState::new(params.len());
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut record = TrainRecord {
        train_mse: Vec::new(),
        val_mse: Vec::new(),
        best_epoch: 0,
        best_val_mse: f64::INFINITY,
        best_weights: model.clone(),
    };
    let mut indices: Vec<usize> = (0..n_train).collect();

    for epoch in 1..=cfg.max_epochs {
        rng::shuffle(&mut shuffle_rng, &mut indices);
        let mut batch_losses = Vec::with_capacity(n_train.div_ceil(cfg.batch_size));
        for chunk in indices.chunks(cfg.batch_size) {
            let bx = train_x.select(Axis(0), chunk);
            let by = train_y.select(Axis(0), chunk);
            let cache = model.forward_cached(&bx)?;
            let loss = mse(cache.output(), &by);
            batch_losses.push(loss);
            let cot = mse_cotangent(cache.output(), &by);
            let grads = model.backward(&cache, &cot)?;
            let flat = model.grads_flat(&grads);
            adam.step(&cfg.adam, &mut params, &flat)?;
            model.set_params_flat(&params)?;
        }
        let train_epoch = batch_losses.iter().sum::<f64>() / batch_losses.len() as f64;
        let val_epoch = mse(&model.forward(val_x)?, val_y);
        if !train_epoch.is_finite() || !val_epoch.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        record.train_mse.push(train_epoch);
        record.val_mse.push(val_epoch);
        let (improved, stop) = stopper.observe(epoch, val_epoch);
        if improved {
            record.best_epoch = epoch;
            record.best_val_mse = val_epoch;
            record.best_weights = model.clone();
        }
        if stop {
            break;
        }
    }
    Ok(record)
}

/// Train against a dataset's stored train/validation split.
pub fn train_on_dataset(model: Mlp, ds: &Dataset, cfg: &TrainConfig) -> Result<TrainRecord> {
    let (tx, ty) = ds.train_xy();
    let (vx, vy) = ds.val_xy();
    train(model, &tx, &ty, &vx, &vy, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::nn::model::{Activation, MlpSpec};
    use ndarray::Array1;

    fn toy_data(n: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
        let mut r = rng::seeded(seed);
        let mut x = Array2::zeros((n, 2));
        let mut y = Array2::zeros((n, 1));
        for i in 0..n {
            let a = rng::uniform_in(&mut r, -1.0, 1.0);
            let b = rng::uniform_in(&mut r, -1.0, 1.0);
            x[[i, 0]] = a;
            x[[i, 1]] = b;
            y[[i, 0]] = (3.0 * a).sin() + 0.5 * b;
        }
        (x, y)
    }

    #[test]
    fn early_stopper_stops_after_one_plus_patience() {
        // Strictly increasing validation error from epoch 1: the first epoch
        // is the best and the stop fires at epoch 1 + patience.
        let patience = 5;
        let mut stopper = EarlyStopper::new(patience);
        let mut stopped_at = None;
        for epoch in 1..=100 {
            let val = epoch as f64;
            let (_, stop) = stopper.observe(epoch, val);
            if stop {
                stopped_at = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped_at, Some(1 + patience));
        assert_eq!(stopper.best(), (1, 1.0));
    }

    #[test]
    fn overfits_a_tiny_dataset() {
        let spec = MlpSpec::new(
            vec![2, 16, 2, 16, 1],
            vec![Activation::Tanh, Activation::Linear, Activation::Tanh, Activation::Linear],
            2,
        )
        .unwrap();
        let model = Mlp::init(spec, derive_seed(42, &[stream::INIT_WEIGHTS])).unwrap();
        let (x, y) = toy_data(16, 1);
        let cfg = TrainConfig {
            batch_size: 16,
            max_epochs: 8000,
            patience: 7999,
            adam: AdamConfig { lr: 5e-3, ..AdamConfig::default() },
            seed: 42,
        };
        let record = train(model, &x, &y, &x, &y, &cfg).unwrap();
        assert!(
            *record.train_mse.last().unwrap() < 1e-5,
            "final train MSE {}",
            record.train_mse.last().unwrap()
        );
    }

    #[test]
    fn linear_net_reaches_least_squares_optimum() {
        let (x, y) = toy_data(32, 2);
        // Closed-form optimum of the affine model via least squares on the
        // design [x0, x1, 1].
        let mut design = Array2::ones((32, 3));
        for i in 0..32 {
            design[[i, 0]] = x[[i, 0]];
            design[[i, 1]] = x[[i, 1]];
        }
        let target = Array1::from_iter(y.column(0).iter().cloned());
        let fit = linalg::lstsq(&design, &target, linalg::DEFAULT_RCOND).unwrap();
        let coef = Array1::from_vec(fit.coef);
        let resid = &design.dot(&coef) - &target;
        let ls_mse = resid.iter().map(|r| r * r).sum::<f64>() / 32.0;

        let spec = MlpSpec::new(vec![2, 1], vec![Activation::Linear], 1).unwrap();
        let model = Mlp::init(spec, 3).unwrap();
        let cfg = TrainConfig {
            batch_size: 32,
            max_epochs: 20_000,
            patience: 19_999,
            adam: AdamConfig { lr: 1e-2, ..AdamConfig::default() },
            seed: 9,
        };
        let record = train(model, &x, &y, &x, &y, &cfg).unwrap();
        let final_mse = *record.train_mse.last().unwrap();
        assert!(
            (final_mse - ls_mse).abs() < 1e-6,
            "train {final_mse} vs least-squares {ls_mse}"
        );
    }

    #[test]
    fn fixed_seed_reproduces_the_record_exactly() {
        let (x, y) = toy_data(24, 5);
        let (vx, vy) = toy_data(8, 6);
        let spec = MlpSpec::new(
            vec![2, 8, 2, 8, 1],
            vec![Activation::Tanh, Activation::Linear, Activation::Tanh, Activation::Linear],
            2,
        )
        .unwrap();
        let cfg = TrainConfig { batch_size: 8, max_epochs: 50, patience: 49, ..TrainConfig::default() };
        let run = || {
            let model = Mlp::init(spec.clone(), 77).unwrap();
            train(model, &x, &y, &vx, &vy, &cfg).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.train_mse, b.train_mse);
        assert_eq!(a.val_mse, b.val_mse);
        assert_eq!(a.best_epoch, b.best_epoch);
        assert_eq!(a.best_weights, b.best_weights);
    }

    #[test]
    fn record_invariants_hold() {
        let (x, y) = toy_data(40, 7);
        let (vx, vy) = toy_data(12, 8);
        let spec = MlpSpec::new(
            vec![2, 6, 1, 6, 1],
            vec![Activation::Tanh, Activation::Linear, Activation::Tanh, Activation::Linear],
            2,
        )
        .unwrap();
        let cfg = TrainConfig { batch_size: 16, max_epochs: 300, patience: 30, ..TrainConfig::default() };
        let model = Mlp::init(spec, 11).unwrap();
        let record = train(model, &x, &y, &vx, &vy, &cfg).unwrap();
        let min_val = record.val_mse.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(record.best_val_mse, min_val);
        assert_eq!(record.val_mse[record.best_epoch - 1], record.best_val_mse);
        // The snapshot reproduces the recorded best validation error.
        let snap_val = mse(&record.best_weights.forward(&vx).unwrap(), &vy);
        assert_eq!(snap_val, record.best_val_mse);
        // Early stop arithmetic: when stopped before max_epochs, exactly
        // patience non-improving epochs follow the best one.
        if record.epochs_run() < cfg.max_epochs {
            assert_eq!(record.epochs_run(), record.best_epoch + cfg.patience);
        }
    }

    #[test]
    fn bad_configs_and_shapes_error() {
        let (x, y) = toy_data(10, 9);
        let spec = MlpSpec::new(
            vec![2, 4, 1, 4, 1],
            vec![Activation::Tanh, Activation::Linear, Activation::Tanh, Activation::Linear],
            2,
        )
        .unwrap();
        let model = Mlp::init(spec, 1).unwrap();
        let bad = TrainConfig { patience: 10, max_epochs: 10, ..TrainConfig::default() };
        assert!(train(model.clone(), &x, &y, &x, &y, &bad).is_err());
        let cfg = TrainConfig { max_epochs: 5, patience: 4, ..TrainConfig::default() };
        let wrong_y = Array2::zeros((10, 3));
        assert!(train(model, &x, &wrong_y, &x, &y, &cfg).is_err());
    }
}
