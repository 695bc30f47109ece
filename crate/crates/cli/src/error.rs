use std::fmt;
use std::path::Path;

use lexfuse_core::FusionError;

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input, missing resource, bad flag value.
    Input(String),
    /// Inputs that are individually valid but do not fit together.
    Consistency(String),
    /// A computation produced no usable number.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Consistency(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }

    pub(crate) fn context(self, what: impl fmt::Display) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{what}: {m}")),
            CliError::Consistency(m) => CliError::Consistency(format!("{what}: {m}")),
            CliError::Numeric(m) => CliError::Numeric(format!("{what}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Consistency(m) => write!(f, "consistency error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        let msg = e.to_string();
        match e {
            FusionError::InvalidScore { .. } | FusionError::ZeroProbability { .. } => CliError::Numeric(msg),
            FusionError::DimensionMismatch(_) | FusionError::RuleMismatch { .. } => CliError::Consistency(msg),
            FusionError::InvalidDistribution(_)
            | FusionError::InvalidParameter { .. }
            | FusionError::InvalidQuestion(_)
            | FusionError::Resource(_) => CliError::Input(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
