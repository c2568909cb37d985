use std::fmt;

/// A failed command. The variant decides the exit status.
#[derive(Debug)]
pub enum CliError {
    /// Something the user can fix: bad input, conflicts, rejected credentials. Exit 1.
    User(String),
    /// The server refused the request with a 4xx envelope. Exit 1.
    Rejected { status: u16, code: String, detail: String },
    /// Network trouble, server faults, local I/O or corruption. Exit 2.
    Fatal(String),
}

impl CliError {
    pub fn user(msg: impl Into<String>) -> Self {
        CliError::User(msg.into())
    }

    pub fn fatal(msg: impl Into<String>) -> Self {
        CliError::Fatal(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) | CliError::Rejected { .. } => 1,
            CliError::Fatal(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) | CliError::Fatal(m) => f.write_str(m),
            CliError::Rejected { code, detail, .. } => write!(f, "{detail} ({code})"),
        }
    }
}

impl From<classgit_core::Error> for CliError {
    fn from(e: classgit_core::Error) -> Self {
        use classgit_core::Error as E;
        match e {
            E::Io { .. } | E::CorruptObject { .. } | E::ObjectNotFound(_) | E::Format { .. } | E::WrongKind { .. } => {
                CliError::Fatal(e.to_string())
            }
            other => CliError::User(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Fatal(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
