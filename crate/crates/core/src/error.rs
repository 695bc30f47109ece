use thiserror::Error;

/// Errors raised by the fusion library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("invalid score at index {index}: {value} (scores must be finite and non-negative)")]
    InvalidScore { index: usize, value: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("zero probability for choice {choice} of module {module} under the logarithmic rule; smooth the forecasts first")]
    ZeroProbability { module: usize, choice: usize },

    #[error("rule mismatch: requested {requested}, weights were trained for {found}")]
    RuleMismatch { requested: String, found: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid question: {0}")]
    InvalidQuestion(String),

    #[error("resource error: {0}")]
    Resource(String),
}

pub type Result<T, E = FusionError> = std::result::Result<T, E>;
