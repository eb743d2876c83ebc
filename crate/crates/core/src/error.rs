use thiserror::Error;

/// Errors raised anywhere in the simulation and processing chain.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown target id `{0}`")]
    UnknownTarget(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid configuration at `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unsupported code length {0}; expected 2^n - 1 with 3 <= n <= 10")]
    UnsupportedCodeLength(usize),
    #[error("hop period of {hop_period} samples is not a multiple of code length {code_len}")]
    ChipDivisibility { hop_period: usize, code_len: usize },
    #[error("empty channel list")]
    EmptyChannels,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("frame too short: {have} samples, need {need}")]
    FrameTooShort { have: usize, need: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("need at least 2 snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("model order {i_paths} too large for dimension {dim}")]
    ModelOrderTooLarge { i_paths: usize, dim: usize },
    #[error("eigenvalue {0} is not positive")]
    NonPositiveEigenvalue(f64),
    #[error("need at least 3 anchors, got {0}")]
    InsufficientAnchors(usize),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::config("<json>", e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
