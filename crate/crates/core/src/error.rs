use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated an operation's precondition.
    Parameter(String),
    /// A numeric routine produced non-finite values or failed to converge.
    Numeric(String),
    /// A time window had no documents left after preprocessing.
    EmptyWindow { window: String },
    /// Fewer than two usable terms were available for a coherence score.
    CoherenceUndefined(String),
    /// A term was not present in an embedding space.
    MissingTerm(String),
    /// Embedding training could not start or failed.
    Training(String),
    /// Input data violated a structural invariant.
    Validation(String),
}

impl Error {
    /// Prefix the message with extra context, keeping the variant.
    pub fn context(self, ctx: impl fmt::Display) -> Self {
        use alloc::format;
        match self {
            Error::Parameter(m) => Error::Parameter(format!("{ctx}: {m}")),
            Error::Numeric(m) => Error::Numeric(format!("{ctx}: {m}")),
            Error::EmptyWindow { window } => Error::EmptyWindow {
                window: format!("{ctx}: {window}"),
            },
            Error::CoherenceUndefined(m) => Error::CoherenceUndefined(format!("{ctx}: {m}")),
            Error::MissingTerm(m) => Error::MissingTerm(m),
            Error::Training(m) => Error::Training(format!("{ctx}: {m}")),
            Error::Validation(m) => Error::Validation(format!("{ctx}: {m}")),
        }
    }

    /// Whether this error stems from numerics or modeling rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Numeric(_) | Error::CoherenceUndefined(_) | Error::Training(_)
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(m) => write!(f, "invalid parameter: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
            Error::EmptyWindow { window } => write!(f, "window {window} has no documents"),
            Error::CoherenceUndefined(m) => write!(f, "coherence undefined: {m}"),
            Error::MissingTerm(t) => write!(f, "term `{t}` not in embedding space"),
            Error::Training(m) => write!(f, "embedding training failed: {m}"),
            Error::Validation(m) => write!(f, "validation error: {m}"),
        }
    }
}

impl core::error::Error for Error {}
