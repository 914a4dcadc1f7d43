//! Configuration, orchestration and serialization around `gsqg-core`.

// Negated float comparisons are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod config;
pub mod diagnostics;
pub mod presets;
pub mod runner;
pub mod snapshot;

pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use runner::{run_experiment, RunError, RunOutcome};
