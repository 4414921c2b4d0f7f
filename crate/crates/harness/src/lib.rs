//! Experiment harness for `frontlab-core`: TOML configuration, single-run
//! subcommands, the E1-E7 acceptance experiments and their reports.
//!
//! Every CSV starts with a `# schema=1` line followed by its header.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod pipelines;
pub mod report;

pub use config::{Config, ExperimentConfig, ExperimentId};
pub use experiments::{list_experiments, run_experiment, CatalogEntry};
pub use report::{emit_report, Criterion, ExperimentReport};
