use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AnnotateError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("invalid batch: {0}")]
    InvalidBatch(String),

    #[error("annotator id must be non-empty")]
    MissingAnnotator,

    #[error("unknown batch {0:?}")]
    UnknownBatch(String),

    #[error("unknown task {0:?}")]
    UnknownTask(String),

    #[error("task {task:?} has no candidate {candidate:?}")]
    UnknownCandidate { task: String, candidate: String },

    #[error("pair ({task}, {candidate}) has no free rater slot")]
    OverQuota { task: String, candidate: String },

    #[error("annotator {annotator:?} already judged ({task}, {candidate}) differently")]
    Conflict {
        task: String,
        candidate: String,
        annotator: String,
    },

    #[error("invalid judgment: {0}")]
    InvalidJudgment(String),

    #[error("agreement undefined: {0}")]
    AgreementUndefined(String),

    #[error("io error on {0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),

    #[error("{path}:{line}: corrupt event: {message}")]
    Log {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl AnnotateError {
    pub fn kind(&self) -> &'static str {
        match self {
            AnnotateError::InvalidBatch(_) => "invalid_batch",
            AnnotateError::MissingAnnotator => "missing_annotator",
            AnnotateError::UnknownBatch(_) => "unknown_batch",
            AnnotateError::UnknownTask(_) => "unknown_task",
            AnnotateError::UnknownCandidate { .. } => "unknown_candidate",
            AnnotateError::OverQuota { .. } => "over_quota",
            AnnotateError::Conflict { .. } => "conflict",
            AnnotateError::InvalidJudgment(_) => "invalid_judgment",
            AnnotateError::AgreementUndefined(_) => "agreement_undefined",
            AnnotateError::Io(..) => "io",
            AnnotateError::Log { .. } => "corrupt_log",
        }
    }
}
