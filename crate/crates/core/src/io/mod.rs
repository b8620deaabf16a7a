//! File formats, run configuration and synthetic data generation.

pub mod config;
pub mod data;
pub mod synth;

pub use config::RunConfig;
pub use data::{read_dataset, read_series_csv, write_dataset, write_series_csv, DataMeta, ExperimentData, Provenance};
pub use synth::generate_synthetic;
