//! Std front end for `gwrk-core`: experiment configuration, file formats,
//! a rayon replica runner and the `gwrk` command dispatcher.

pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod run;

pub use config::{ExperimentConfig, Verb};
pub use error::{CliError, CliResult};
pub use parallel::ThreadPool;
pub use run::{run, run_report};
