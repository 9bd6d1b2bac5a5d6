use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while reading archives, rosters and revision logs.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read {what}: {source}")]
    Io {
        what: String,
        #[source]
        source: std::io::Error,
    },
    #[error("stream is not an mbox archive (no \"From \" separator line found)")]
    NotMbox,
    #[error("list id must not be empty")]
    EmptyListId,
    #[error("invalid roster: {0}")]
    Roster(String),
}

/// Violated preconditions on analysis operations.
#[derive(Debug, Error, PartialEq)]
pub enum ArgumentError {
    #[error("date_from ({from}) is after date_to ({to})")]
    InvertedRange { from: i64, to: i64 },
    #[error("keyword set must not be empty")]
    NoKeywords,
    #[error("multiset must not be empty")]
    EmptyMultiset,
    #[error("expected exactly two lists, got {0}")]
    ListCount(usize),
    #[error("discussion {discussion} belongs to list {found}, expected {expected}")]
    WrongList {
        discussion: String,
        found: String,
        expected: String,
    },
    #[error("both discussion sets come from list {0}")]
    SameList(String),
    #[error("override references unknown discussion {0}")]
    UnknownDiscussion(String),
    #[error("override references unknown stage {0}")]
    UnknownStage(String),
    #[error("selected message {0} is not present in the archive")]
    UnresolvedMessage(String),
    #[error("contingency table is empty (total = 0)")]
    EmptyTable,
    #[error("category {0} is not part of the configured scheme")]
    UnknownCategory(String),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// Errors surfaced by the CLI layer, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("missing input file: {}", .0.display())]
    MissingInput(PathBuf),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Argument(#[from] ArgumentError),
    #[error("store error: {0}")]
    Store(String),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Store(_) => 3,
            _ => 2,
        }
    }
}
