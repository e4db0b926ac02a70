//! Experiment harness: configuration loading, the Monte-Carlo sweep driver,
//! closed-form reference values, and CSV, metadata, and plot emission.

pub mod analytic;
pub mod config;
pub mod report;
pub mod sweep;

pub use config::{Algorithm, ExperimentConfig, SweepAxis, SweepConfig};
pub use sweep::{derive_seed, run_sweep, AlgoStats, ExperimentReport, SweepRow};
