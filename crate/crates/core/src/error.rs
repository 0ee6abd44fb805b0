use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Each variant maps onto one of the process exit codes used by the `kic`
/// binary, see [`KicError::exit_code`].
#[derive(Debug, Error)]
pub enum KicError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("eigen-residual {worst:.3e} exceeds tolerance {tol:.3e}")]
    Residual { worst: f64, tol: f64 },

    #[error("internal consistency violated: {0}")]
    Consistency(String),

    #[error("saturation estimate failed: {0}")]
    Estimation(String),

    #[error("missing spectrum cache: {0}")]
    MissingCache(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {msg}")]
    Format { path: String, msg: String },
}

impl KicError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        KicError::InvalidArgument(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        KicError::Numerical(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        KicError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// 0 success, 1 invariant violation, 2 bad arguments, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            KicError::Consistency(_) => 1,
            KicError::InvalidArgument(_)
            | KicError::ResourceLimit(_)
            | KicError::MissingCache(_)
            | KicError::Format { .. }
            | KicError::Io { .. } => 2,
            KicError::Numerical(_) | KicError::Residual { .. } | KicError::Estimation(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, KicError>;
