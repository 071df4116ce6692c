use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside the basis domain `[0, 1]`.
    #[error("parameter {0} is outside the basis domain [0, 1]")]
    Domain(f64),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Coincident or collapsed data that makes the parameterization undefined.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// The requested fitting configuration cannot run (bad sizes, rank deficiency, ...).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("rank deficient: {0}")]
    Rank(String),

    /// The initial fit already solves the normal equations, so relative errors are undefined.
    #[error("degenerate start: initial gradient aggregate is zero")]
    DegenerateStart,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
