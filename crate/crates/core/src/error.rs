use thiserror::Error;

/// Errors raised anywhere in the identification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration: unknown equation, invalid coefficient, step size
    /// outside the stability bound and similar.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument that violates a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Generator matrix whose rows do not sum to zero or that has a negative
    /// off-diagonal rate.
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    /// Solver or linear algebra failure (non-finite state, residual not reached).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Non-finite loss during optimisation.
    #[error("training diverged at iteration {iteration}: {detail}")]
    TrainingDiverged { iteration: usize, detail: String },

    /// Sample set that cannot support a mixture fit.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Birth-death chain hit the component ceiling in strict mode.
    #[error("component ceiling {ceiling} reached at process time {time:.3}")]
    CeilingReached { ceiling: usize, time: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file contents.
    #[error("malformed {what}: {detail}")]
    Format { what: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn format(what: &str, detail: impl Into<String>) -> Self {
        Error::Format {
            what: what.to_string(),
            detail: detail.into(),
        }
    }
}
