//! Robust geometric constellation shaping.
//!
//! Learns constellations end-to-end through a differentiable surrogate
//! channel (additive noise plus residual phase noise) and evaluates them on a
//! realistic test channel with Wiener laser phase noise and blind phase search
//! carrier recovery, scoring with a mismatched Gaussian receiver.
//!
//! The crate is `no_std` and only needs `alloc`. File IO, configuration and
//! the command line live in the companion `gcs` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autoencoder;
pub mod bps;
pub mod channel;
pub mod constellation;
mod error;
pub mod metrics;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};

pub use num_complex::Complex64;
