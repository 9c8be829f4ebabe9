use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layout error: {0}")]
    Layout(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A state or operator failed validation. `invariant` names the check
    /// that was violated (for example "trace" or "psd").
    #[error("invariant `{invariant}` violated: {detail}")]
    Invariant { invariant: String, detail: String },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invariant(name: &str, detail: impl Into<String>) -> Self {
        Error::Invariant {
            invariant: name.to_string(),
            detail: detail.into(),
        }
    }

    /// Short machine-readable tag for error reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Layout(_) => "layout",
            Error::Dimension(_) => "dimension",
            Error::Invariant { .. } => "invariant",
            Error::Solver(_) => "solver",
            Error::Argument(_) => "argument",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(std::io::Error::other(e.to_string()))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
