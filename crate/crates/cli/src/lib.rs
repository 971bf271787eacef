//! Operator surface for the link simulator: a flat key-value config format,
//! the run driver (train, evaluate, write traces and reports, aggregate
//! across replications), and the gradient self-test.

pub mod config;
pub mod driver;

pub use config::{load_config, parse_config, render_config, save_config, ConfigError, RunConfig};
pub use driver::{cmd_gradcheck, cmd_report, cmd_run, RunArtifacts, RunSummary, Verbosity};
