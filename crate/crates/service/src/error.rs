use classgit_core::ObjectId;

/// Failures surfaced to API callers. Each maps to one machine-readable code.
#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("missing, expired, or revoked token")]
    Unauthorized,
    #[error("invalid username or password")]
    AuthFailed,
    #[error("{0}")]
    Forbidden(String),
    #[error("username {0:?} is taken")]
    UsernameTaken(String),
    #[error("password must be at least {0} characters")]
    WeakPassword(usize),
    #[error("deadline must be in the future")]
    InvalidDeadline,
    #[error("no assignment has invite code {0:?}")]
    UnknownCode(String),
    #[error("unknown repository {0:?}")]
    UnknownRepo(String),
    #[error("unknown assignment {0:?}")]
    UnknownAssignment(String),
    #[error("{0}")]
    CorruptObject(String),
    #[error("{0}")]
    MissingObject(String),
    #[error("branch {branch} is at {}, not the expected {}", show(current), show(expected))]
    RefConflict {
        branch: String,
        expected: Option<ObjectId>,
        current: Option<ObjectId>,
    },
    #[error("{new_target} does not descend from {old}")]
    NonFastForward { old: ObjectId, new_target: ObjectId },
    #[error("the deadline for this assignment has passed")]
    DeadlinePassed,
    #[error("{0}")]
    Invalid(String),
    #[error("storage failure: {0}")]
    Storage(String),
}

fn show(id: &Option<ObjectId>) -> String {
    id.map_or_else(|| "(unborn)".to_owned(), |id| id.to_string())
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Unauthorized => "unauthorized",
            ServiceError::AuthFailed => "auth_failed",
            ServiceError::Forbidden(_) => "forbidden",
            ServiceError::UsernameTaken(_) => "username_taken",
            ServiceError::WeakPassword(_) => "weak_password",
            ServiceError::InvalidDeadline => "invalid_deadline",
            ServiceError::UnknownCode(_) => "unknown_code",
            ServiceError::UnknownRepo(_) => "unknown_repo",
            ServiceError::UnknownAssignment(_) => "unknown_assignment",
            ServiceError::CorruptObject(_) => "corrupt_object",
            ServiceError::MissingObject(_) => "missing_object",
            ServiceError::RefConflict { .. } => "ref_conflict",
            ServiceError::NonFastForward { .. } => "non_fast_forward",
            ServiceError::DeadlinePassed => "deadline_passed",
            ServiceError::Invalid(_) => "invalid_request",
            ServiceError::Storage(_) => "storage_error",
        }
    }

    /// HTTP status for the error envelope.
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::Unauthorized | ServiceError::AuthFailed => 401,
            ServiceError::Forbidden(_) | ServiceError::DeadlinePassed => 403,
            ServiceError::UnknownCode(_) | ServiceError::UnknownRepo(_) | ServiceError::UnknownAssignment(_) => 404,
            ServiceError::UsernameTaken(_) | ServiceError::RefConflict { .. } | ServiceError::NonFastForward { .. } => {
                409
            }
            ServiceError::WeakPassword(_)
            | ServiceError::InvalidDeadline
            | ServiceError::CorruptObject(_)
            | ServiceError::MissingObject(_)
            | ServiceError::Invalid(_) => 422,
            ServiceError::Storage(_) => 500,
        }
    }
}

impl From<classgit_core::Error> for ServiceError {
    fn from(e: classgit_core::Error) -> Self {
        use classgit_core::Error as E;
        match e {
            E::CorruptObject { .. } | E::MalformedBody { .. } | E::WrongKind { .. } | E::PayloadTooLarge { .. } => {
                ServiceError::CorruptObject(e.to_string())
            }
            E::ObjectNotFound(_) => ServiceError::MissingObject(e.to_string()),
            E::InvalidName(_) | E::InvalidObjectId(_) | E::Format { .. } => ServiceError::Invalid(e.to_string()),
            other => ServiceError::Storage(other.to_string()),
        }
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
