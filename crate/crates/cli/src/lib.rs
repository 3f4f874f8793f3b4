//! Batch front-end for the mediabias pipeline: ingest, label, sweep,
//! rank, concordance and frequency statistics, all driven by one JSON
//! config file.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod synth;

pub use commands::main_with;
pub use config::PipelineConfig;
pub use error::CliError;
