//! fixfit: find the minimal latent parameterization of a simulation model and
//! work in it.
//!
//! The crate covers the full pipeline:
//!
//! * forward models: closed-form Kepler orbits ([`kepler`]) and the
//!   Larter-Breakspear neural mass network with BOLD/functional-connectivity
//!   post-processing ([`lb`], [`bold`]),
//! * quasi-random dataset generation with physical filters ([`sobol`],
//!   [`params`], [`dataset`]),
//! * from-scratch bottleneck multilayer perceptrons trained with Adam
//!   ([`nn`]),
//! * bottleneck-width sweeps with Welch-test model selection ([`sweep`]),
//! * structural-and-correlative sensitivity analysis of latent coordinates
//!   ([`scsa`]),
//! * latent-space parameter fitting with basin hopping over BFGS
//!   ([`fitting`]),
//! * small deterministic SVG reports ([`svg`]).
//!
//! Everything is seeded and deterministic: the same configuration and master
//! seed reproduce every artifact bit for bit.

pub mod bold;
pub mod dataset;
pub mod error;
pub mod fitting;
pub mod kepler;
pub mod lb;
pub mod linalg;
pub mod nn;
pub mod params;
pub mod rng;
pub mod scsa;
pub mod sobol;
pub mod svg;
pub mod sweep;

pub use error::{Error, Result};
