//! Information capacity of simulated scalp EEG.
//!
//! This crate simulates a synthetic EEG forward model (latent AR(1) dynamics,
//! ring sources, Gaussian-blur leadfield, correlated sensor noise), computes
//! the analytic Gaussian-channel mutual information of the resulting sensor
//! channel, estimates mutual information empirically with a k-nearest-neighbor
//! estimator, trains ridge and MLP decoders, and sweeps electrode count and
//! SNR grids into reproducible result tables and plots.

pub mod capacity;
pub mod cli;
pub mod decoders;
pub mod error;
pub mod experiments;
pub mod forward;
pub mod mi;
pub mod numerics;

pub use error::{Error, Result};
