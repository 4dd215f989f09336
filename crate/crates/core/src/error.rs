use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Input file structure is wrong (header, column names).
    #[error("format error: {0}")]
    Format(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    /// Input is well formed but violates a uniqueness or consistency rule.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("pairing error: {0}")]
    Pairing(String),

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    /// Invalid combination of user-facing options.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line());
        match (err.kind(), line) {
            (csv::ErrorKind::Io(_), _) => Error::Io(err.to_string()),
            (_, Some(line)) => Error::Parse {
                line,
                message: err.to_string(),
            },
            (_, None) => Error::Format(err.to_string()),
        }
    }
}
