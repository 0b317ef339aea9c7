use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown state {0}")]
    UnknownState(usize),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("alphabet of {letters} letters exceeds the cap of {cap}")]
    AlphabetTooLarge { letters: u64, cap: u64 },
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("capacity exceeded while building {what}: {built} states")]
    Capacity { what: &'static str, built: usize },
    #[error("timeout after {built} states or episodes")]
    Timeout { built: usize },
    #[error("automaton does not have the {0} shape")]
    Shape(&'static str),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("no valid strategy exists (maximal satisfaction probability {max_sat})")]
    NoValidStrategy { max_sat: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("value iteration diverged: {0}")]
    Divergence(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable category used by the CLI's JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownState(_) => "unknown_state",
            Error::AlphabetMismatch(_) => "alphabet_mismatch",
            Error::AlphabetTooLarge { .. } => "alphabet_too_large",
            Error::Syntax { .. } => "syntax",
            Error::Unsupported(_) => "unsupported",
            Error::Capacity { .. } => "capacity",
            Error::Timeout { .. } => "timeout",
            Error::Shape(_) => "shape",
            Error::InvalidModel(_) => "invalid_model",
            Error::NoValidStrategy { .. } => "no_valid_strategy",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Divergence(_) => "divergence",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}
