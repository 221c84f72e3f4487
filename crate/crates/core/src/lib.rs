//! Core library for a stacked-unsupervised federated flow NIDS.
//!
//! The pipeline per silo: min-max scale, split 80/20, fit an Energy Flow
//! Classifier on the benign training rows, append its binary prediction as a
//! feature, split the stacked training data 90/10 into train/validation, then
//! train a deep autoencoder whose per-sample reconstruction MAE drives the
//! benign/attack threshold decision. [`fedcore`] wires those pieces into a
//! cross-silo federated simulation with five server aggregation strategies.

pub mod autoencoder;
pub mod dataset;
pub mod detector;
pub mod efc;
mod error;
pub mod fedcore;
pub mod metrics;
pub mod stats;

pub use error::{Error, Result};
