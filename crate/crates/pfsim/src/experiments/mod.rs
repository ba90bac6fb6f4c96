//! Sampling runs, snapshot analysis and the reproduction recipes behind the CLI.

pub mod analyze;
pub mod config;
pub mod reproduce;
pub mod sample;
pub mod snapshot;

pub use analyze::{cmd_analyze, AnalysisReport};
pub use config::ExperimentConfig;
pub use reproduce::{cmd_reproduce, ReproduceOptions, Scale, Verdict};
pub use sample::{cmd_sample, Manifest};
pub use snapshot::{Snapshot, SnapshotHeader};
