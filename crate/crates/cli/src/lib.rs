//! Command-line pipeline: simulate a cohort, train the linear model, verify
//! it against the closed-form fit, and score students.

pub mod commands;
pub mod config;
pub mod error;
pub mod files;

pub use config::PipelineConfig;
pub use error::{CliError, Result};
