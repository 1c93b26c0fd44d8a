use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value is out of its legal range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Matrix input was expected to be symmetric.
    #[error("matrix not symmetric: max |a_ij - a_ji| = {max_asymmetry:.3e} exceeds tolerance")]
    NotSymmetric { max_asymmetry: f64 },

    /// Matrix input was expected to be positive semidefinite.
    #[error("matrix not positive semidefinite: smallest eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    /// Matrix input was expected to be positive definite.
    #[error("matrix not positive definite")]
    NotPositiveDefinite,

    /// An iterative numeric routine did not converge.
    #[error("{routine} did not converge within {iterations} iterations")]
    NonConvergence {
        routine: &'static str,
        iterations: usize,
    },

    /// A numeric argument lies outside the routine's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Empty input where at least one element is required.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Mismatched dimensions between two inputs.
    #[error("dimension mismatch: {context} (expected {expected}, got {actual})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A malformed cell or row in a data file.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A required column is missing from a data file.
    #[error("missing column {0:?}")]
    MissingColumn(String),

    /// Too few points for the requested operation.
    #[error("{context}: need at least {needed} points, have {available}")]
    TooFewPoints {
        context: &'static str,
        needed: usize,
        available: usize,
    },

    /// No peel candidate removes any point.
    #[error("cannot peel: all candidates are void")]
    CannotPeel,

    /// The conditional-moment model is singular.
    #[error("singular model: {0}")]
    SingularModel(String),

    /// File-system failure with the offending path.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used by callers that map errors to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorClass {
    /// Bad configuration or arguments.
    Config,
    /// Bad or unreadable data.
    Data,
    /// Numeric failure (non-convergence, degenerate input).
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidConfig(_) => ErrorClass::Config,
            Parse { .. } | MissingColumn(_) | Io { .. } | DimensionMismatch { .. }
            | EmptyInput(_) | TooFewPoints { .. } => ErrorClass::Data,
            NotSymmetric { .. }
            | NotPositiveSemidefinite { .. }
            | NotPositiveDefinite
            | NonConvergence { .. }
            | Domain(_)
            | CannotPeel
            | SingularModel(_) => ErrorClass::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
