//! fixfit command-line pipeline: `generate`, `sweep`, `sensitivity`, `fit`,
//! and `report` subcommands driven by one declarative JSON config.
//!
//! Each stage writes append-only artifacts into its own workdir
//! subdirectory, stamped with the config hash so resumed runs never mix
//! settings. With a fixed master seed the whole pipeline is reproducible
//! byte for byte.

pub mod commands;
pub mod config;
pub mod error;
pub mod stages;
