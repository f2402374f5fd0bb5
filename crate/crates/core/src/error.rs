use alloc::string::String;

/// Failures reported by kernel evaluation, quadrature and the exact layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The operation was called with incompatible inputs (e.g. jets with different centers).
    #[error("usage error: {0}")]
    Usage(String),
    /// A jet division would produce a pole.
    #[error("singularity: numerator vanishes to order {numerator}, divisor to order {divisor}")]
    Singularity { numerator: usize, divisor: usize },
    /// A series hit its term budget before reaching the requested tolerance.
    #[error("truncation: {what} needs more than {max_terms} terms")]
    Truncation {
        what: &'static str,
        max_terms: usize,
    },
    /// A quadrature or marching scheme could not certify the requested accuracy.
    #[error("accuracy: estimated error {estimate:e} exceeds tolerance {tol:e} ({what})")]
    Accuracy {
        what: &'static str,
        estimate: f64,
        tol: f64,
    },
    /// The evaluator does not provide the requested capability.
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
