use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A record in a line-delimited document could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    /// Not enough corpus items to satisfy a request.
    #[error("capacity error: category `{category}` needs {needed} items, {available} available")]
    Capacity {
        category: String,
        needed: usize,
        available: usize,
    },

    /// An operation was attempted in a state that does not allow it.
    #[error("state error: {0}")]
    State(String),

    #[error("time went backwards: {t_ms} ms after {last_ms} ms")]
    Monotonicity { t_ms: u64, last_ms: u64 },

    #[error("no impressions in the requested window")]
    EmptyWindow,

    #[error("missing phase marks: {0}")]
    MissingPhase(String),

    /// The session's condition does not provide the requested tool.
    #[error("capability error: {0}")]
    Capability(String),

    #[error("provider error: {0}")]
    Provider(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code, used in API error envelopes.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::Capacity { .. } => "capacity",
            Error::State(_) => "state",
            Error::Monotonicity { .. } => "monotonicity",
            Error::EmptyWindow => "empty_window",
            Error::MissingPhase(_) => "missing_phase",
            Error::Capability(_) => "capability",
            Error::Provider(_) => "provider",
            Error::Io(_) => "io",
        }
    }
}
