use std::path::PathBuf;

use crate::objstore::{ObjectId, ObjectKind};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the version-control core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("payload of {size} bytes exceeds the {limit} byte object limit")]
    PayloadTooLarge { size: usize, limit: usize },
    #[error("malformed {kind} body: {reason}")]
    MalformedBody { kind: ObjectKind, reason: String },
    #[error("invalid object id {0:?}")]
    InvalidObjectId(String),
    #[error("object {0} not found")]
    ObjectNotFound(ObjectId),
    #[error("object {id} is corrupt: {reason}")]
    CorruptObject { id: ObjectId, reason: String },
    #[error("object {id} is a {actual}, expected a {expected}")]
    WrongKind {
        id: ObjectId,
        expected: ObjectKind,
        actual: ObjectKind,
    },

    #[error("invalid path {path:?}: {reason}")]
    InvalidPath { path: String, reason: &'static str },
    #[error("path {path:?} conflicts with tracked path {existing:?}")]
    PathConflict { path: String, existing: String },
    #[error("path {0:?} is neither staged nor committed")]
    PathNotStaged(String),
    #[error("path {0:?} is not known to the index or HEAD")]
    PathUnknown(String),

    #[error("nothing to commit")]
    NothingToCommit,
    #[error("user {0:?} is not authorized for this repository")]
    Unauthorized(String),
    #[error("commit message must not be empty")]
    EmptyMessage,
    #[error("invalid author {0:?}")]
    InvalidAuthor(String),
    #[error("branch {0:?} already exists")]
    BranchExists(String),
    #[error("invalid branch name {0:?}")]
    InvalidName(String),
    #[error("unknown branch or commit {0:?}")]
    UnknownSource(String),
    #[error("unknown branch {0:?}")]
    UnknownBranch(String),
    #[error("index has staged changes; commit or reset them first")]
    DirtyIndex,
    #[error("commits {0} and {1} share no common ancestor")]
    NoCommonAncestor(ObjectId, ObjectId),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{what}: {reason}")]
    Format { what: String, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(kind: ObjectKind, reason: impl Into<String>) -> Self {
        Error::MalformedBody {
            kind,
            reason: reason.into(),
        }
    }
}
