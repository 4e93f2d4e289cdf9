use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the requested operation.
    #[error("domain error: {what} (offending value {value:e})")]
    Domain { what: String, value: f64 },

    /// Incompatible matrix or vector shapes.
    #[error("shape error: {0}")]
    Shape(String),

    /// An iterative method did not converge.
    #[error("{method} failed to converge (residual {residual:e})")]
    Convergence { method: &'static str, residual: f64 },

    /// A numerical breakdown (singular factorization, negative recurrence coefficient, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A parameter value for which the construction degenerates.
    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    /// A variable was referenced that the system does not declare.
    #[error("undeclared variable: {0}")]
    UndeclaredVariable(String),

    /// Fixed values conflict with the equality constraints of a system.
    #[error("inconsistent fixings: {0}")]
    InconsistentFixings(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The problem exceeds a configured size limit.
    #[error("problem too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(what: impl Into<String>, value: f64) -> Self {
        Error::Domain {
            what: what.into(),
            value,
        }
    }
}
