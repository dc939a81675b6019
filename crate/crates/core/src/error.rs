use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operator is not Hermitian (max entrywise deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver failure ({status}): {message}")]
    Solver { status: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Layout(_) => "layout",
            Error::UnknownLabel(_) => "unknown-label",
            Error::DuplicateLabel(_) => "duplicate-label",
            Error::Dimension(_) => "dimension",
            Error::NotHermitian(_) => "not-hermitian",
            Error::InvalidState(_) => "invalid-state",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Precondition(_) => "precondition",
            Error::Solver { .. } => "solver",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::Solver { .. })
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
