use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate question id {0:?}")]
    DuplicateId(String),

    #[error("invalid alias {0:?}: aliases must be non-empty and must not be ORG_NAME")]
    InvalidAlias(String),

    #[error("unknown document id {0:?}")]
    UnknownDocument(String),

    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("scorer failed on question {id:?}: {message}")]
    ScorerFailed { id: String, message: String },

    #[error("not enough units to split: need at least {required}, have {available}")]
    InsufficientUnits { required: usize, available: usize },

    #[error("agreement item {item:?}: {message}")]
    AgreementItem { item: String, message: String },

    #[error("model service {endpoint}: {message}")]
    Service { endpoint: String, message: String },

    #[error("model service {endpoint} does not support {feature}")]
    Unsupported { endpoint: String, feature: String },

    #[error("round {round} failed: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::DuplicateId(_) => "duplicate_id",
            Error::InvalidAlias(_) => "invalid_alias",
            Error::UnknownDocument(_) => "unknown_document",
            Error::DegenerateTraining(_) => "degenerate_training",
            Error::InvalidInput(_) => "invalid_input",
            Error::ScorerFailed { .. } => "scorer_failed",
            Error::InsufficientUnits { .. } => "insufficient_units",
            Error::AgreementItem { .. } => "agreement_item",
            Error::Service { .. } => "service",
            Error::Unsupported { .. } => "unsupported",
            Error::Round { .. } => "round",
        }
    }
}
