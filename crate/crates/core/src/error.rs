use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The orbit left the admissible region (norm above the escape radius or non-finite).
    #[error("orbit escaped at step {index}")]
    Escape { index: usize, state: Vec<f64> },

    #[error("map is not invertible (B = 0)")]
    NonInvertible,

    #[error("fixed-point quadratic has no real roots (discriminant {discriminant})")]
    NoFixedPoint { discriminant: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no section crossing within {steps} integration steps")]
    SectionTimeout { steps: usize },

    #[error("singular tangent map at stored point {index}")]
    Singular { index: usize },

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("fixed point is not a saddle with one-dimensional unstable manifold")]
    NotSaddle,

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("orbit has {orbit} points but the direction field covers {field} (+{warmup} warmup)")]
    LengthMismatch {
        orbit: usize,
        field: usize,
        warmup: usize,
    },

    #[error("LMP graph has no pairs")]
    EmptyGraph,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the command-line frontend.
    ///
    /// Categories are disjoint: 1 configuration/usage, 2 escape,
    /// 3 numerical hard failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::InvalidArgument(_)
            | Error::NonInvertible
            | Error::DimensionMismatch { .. }
            | Error::UnsupportedDimension(_)
            | Error::LengthMismatch { .. } => 1,
            Error::Escape { .. } => 2,
            Error::NoFixedPoint { .. }
            | Error::SectionTimeout { .. }
            | Error::Singular { .. }
            | Error::NoConvergence { .. }
            | Error::NotSaddle
            | Error::EmptyGraph => 3,
            Error::Io(_) => 4,
        }
    }
}
