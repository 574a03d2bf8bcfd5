//! Error types shared across the pipeline stages.

use thiserror::Error;

/// Coarse classification used by callers to map failures to exit codes:
/// configuration problems, data problems, and numerical failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("config: {0}")]
    Config(String),

    #[error("invalid regex `{pattern}`: {message}")]
    Regex { pattern: String, message: String },

    #[error("corpus record {line}: {message}")]
    Record { line: usize, message: String },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("document `{id}`: {message}")]
    Document { id: String, message: String },

    #[error("inconsistent covariates for document `{id}`: {message}")]
    Covariates { id: String, message: String },

    #[error("embedding file: {0}")]
    Embeddings(String),

    #[error("vocabulary is empty after applying min_df/max_terms filters")]
    EmptyVocabulary,

    #[error("{op}: {message}")]
    InvalidArgument { op: &'static str, message: String },

    #[error("{op} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        op: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("perfect linear fit: residual variance is zero, supply lambda manually")]
    ZeroResidualVariance,

    #[error("perfect separation detected at lambda={lambda}: coefficients diverge")]
    PerfectSeparation { lambda: f64 },

    #[error("singular information matrix on the active set")]
    SingularInformation,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml: {0}")]
    Toml(String),
}

impl CoreError {
    pub fn invalid(op: &'static str, message: impl Into<String>) -> Self {
        CoreError::InvalidArgument {
            op,
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        use CoreError::*;
        match self {
            Config(_) | Regex { .. } | InvalidArgument { .. } | Toml(_) => ErrorClass::Config,
            Record { .. } | DuplicateId(_) | Document { .. } | Covariates { .. }
            | Embeddings(_) | EmptyVocabulary | Io(_) | Json(_) => ErrorClass::Data,
            NoConvergence { .. } | ZeroResidualVariance | PerfectSeparation { .. }
            | SingularInformation => ErrorClass::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
