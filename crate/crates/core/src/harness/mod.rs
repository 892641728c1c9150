//! Experiment harness: run configuration, persisted run records, the
//! replication studies, the model bake-off, and the CLI front end.

pub mod bakeoff;
pub mod cli;
pub mod config;
pub mod fig5;
pub mod fig6;
pub mod record;
pub mod stats;

pub use config::{ExperimentKind, RunConfig};
pub use record::{FileEntry, RunRecord};
