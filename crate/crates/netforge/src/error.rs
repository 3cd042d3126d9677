use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{path}: schema version {found}, expected {expected}")]
    Schema { path: PathBuf, found: u32, expected: u32 },
    #[error("{path}: {msg}")]
    Content { path: PathBuf, msg: String },
    #[error(transparent)]
    Core(#[from] netforge_core::Error),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("{0}")]
    Usage(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code: 1 for bad input, 2 for infeasible or refused
    /// requests, 3 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(netforge_core::Error::Refused { .. } | netforge_core::Error::SpaceTooLarge(_)) => 2,
            Error::Generation(_) => 2,
            Error::Internal(_) => 3,
            _ => 1,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Internal(e.to_string())
    }
}
