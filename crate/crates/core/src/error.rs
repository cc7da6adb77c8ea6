use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index out of range: {what} = {index} (limit {limit})")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("observation domain mismatch: {0}")]
    Domain(String),
    #[error("malformed model: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("observation is impossible under every hypothesis with positive mass")]
    ImpossibleObservation,
    #[error("log-odds undefined: both hypotheses have zero mass")]
    UndefinedOdds,
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("horizon exceeded: {0}")]
    Horizon(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
