//! Synthetic student-activity cohorts, a gradient-descent linear
//! performance model with a closed-form oracle, and credit scores.
//!
//! - [`rng_stats`] seeded samplers and summary statistics
//! - [`cohort_sim`] cohort generation
//! - [`regressor`] splitting, normalization, gradient descent, least squares
//! - [`credit`] credit scores and importance ranking

pub mod cohort_sim;
pub mod credit;
pub mod error;
mod linalg;
pub mod regressor;
pub mod rng_stats;

pub use cohort_sim::{Feature, SimulationConfig, StudentRecord};
pub use error::{Error, Result};
pub use regressor::{CostHistory, ModelParams, NormMeta, NormScheme, SplitDataset, TrainConfig};
