use thiserror::Error;

/// Errors surfaced by the estimation toolkit.
///
/// Evaluation failures of the objective itself are *not* errors: they are
/// recorded on the run and the failing point receives the penalty fitness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter '{0}' is already defined")]
    DuplicateParameter(String),

    #[error("parameter '{name}': min ({min}) must be strictly below max ({max})")]
    InvalidBounds { name: String, min: f64, max: f64 },

    #[error("expected a vector of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown method '{0}' (expected one of: pso, saa, acor, ees1, ees2)")]
    UnknownMethod(String),

    #[error("options are for method '{options_for}' but '{method}' was requested")]
    OptionsMismatch {
        options_for: &'static str,
        method: &'static str,
    },

    #[error("objective has no parameters")]
    EmptySpace,

    #[error("particle index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("{0}")]
    InvalidInput(String),

    #[error("external model setup: {0}")]
    ModelSetup(String),
}

pub type Result<T> = std::result::Result<T, Error>;
