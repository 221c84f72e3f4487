//! Experiment driver for the stacked federated flow NIDS: configuration,
//! the per-silo preparation pipeline, the three evaluation modes and report
//! writing. The `fednids` binary is a thin argument parser over this crate.

pub mod config;
pub mod experiment;
pub mod pipeline;
pub mod report;
