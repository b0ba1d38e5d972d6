use thiserror::Error;

/// Errors raised by the analysis toolkit.
#[derive(Debug, Error)]
pub enum RelayError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("invalid initial state: {0}")]
    InvalidInitialState(String),

    #[error("event cap of {cap} exceeded; last events: {}", log.join(", "))]
    EventCap { cap: usize, log: Vec<String> },

    #[error("time {0} is outside the trajectory span")]
    OutOfRange(String),

    #[error("class exit: {0}")]
    ClassExit(String),

    #[error("unsupported class: initial function has {0} interior zeros (at most two are classified)")]
    UnsupportedClass(usize),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("event reordering; linear profile invalid: {0}")]
    Linearity(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RelayError>;
