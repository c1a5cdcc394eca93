//! Experiment runner around `gcs-core`: configuration files, training jobs,
//! test sweeps, result tables and the `gcs` command line.

#![forbid(unsafe_code)]

pub mod config;
mod error;
pub mod experiment;
pub mod io;
pub mod sweep;
pub mod train_job;

pub use error::{Error, Result};
