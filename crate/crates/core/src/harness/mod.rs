//! Experiment runner behind the `d2dcov` command-line tool.

pub mod config;
pub mod experiment;
pub mod figures;
pub mod plot;
pub mod units;

pub use config::ConfigFile;
pub use experiment::{replay, run, ExperimentKind, ExperimentSpec, Manifest, ResultTable, RunOutput, Sweep};
pub use units::convert_units;
