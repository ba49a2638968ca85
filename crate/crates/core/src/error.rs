use thiserror::Error;

/// Errors produced by the simulation, fitting and scoring layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate feature column `{column}`: zero spread in training data")]
    DegenerateFeature { column: &'static str },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error(
        "gradient descent diverged at iteration {iteration} (alpha = {alpha}): cost is {cost}"
    )]
    Diverged {
        iteration: usize,
        alpha: f64,
        cost: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical routines rather than of their inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::DegenerateFeature { .. } | Error::SingularSystem(_) | Error::Diverged { .. }
        )
    }
}
