//! From-scratch dense feedforward networks with a bottleneck layer: forward
//! pass, exact reverse-mode gradients for weights and inputs, Adam updates,
//! and mini-batch training with early stopping.

mod adam;
mod model;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use model::{
    mse, mse_cotangent, Activation, ForwardCache, Gradients, Mlp, MlpSpec,
};
pub use train::{train, train_on_dataset, EarlyStopper, TrainConfig, TrainRecord};
