use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario document: {0}")]
    Parse(String),
    #[error("scenario invariant `{invariant}` violated: {detail}")]
    Invalid {
        invariant: &'static str,
        detail: String,
    },
    #[error("insufficient surface area: placed {placed} of {requested} defects")]
    InsufficientSurface { requested: usize, placed: usize },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl ScenarioError {
    /// Name of the violated invariant, when this is a validation error.
    pub fn invariant(&self) -> Option<&'static str> {
        match self {
            ScenarioError::Invalid { invariant, .. } => Some(invariant),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log truncated at byte offset {offset}")]
    Truncated { offset: u64 },
    #[error("log format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("malformed log record at byte offset {offset}: {message}")]
    Malformed { offset: u64, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("replay requires an existing log")]
    MissingLog,
    #[error("invalid pilot: {0}")]
    Pilot(String),
    #[error("replay diverged from the log: {0}")]
    Diverged(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("json encoding failed: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum AssessmentError {
    #[error("empty group: at least one score card is required")]
    EmptyGroup,
    #[error("questionnaire value {value} for `{field}` is outside the 1..=5 Likert scale")]
    LikertRange { field: String, value: i64 },
    #[error("questionnaire is incomplete: missing {0}")]
    Incomplete(String),
    #[error("malformed questionnaire: {0}")]
    Malformed(String),
    #[error("report write failed for {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
