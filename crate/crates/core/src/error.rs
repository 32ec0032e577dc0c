use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} must be symmetric")]
    NotSymmetric(&'static str),

    #[error("{0} must have finite entries")]
    NonFinite(&'static str),

    /// Parameter outside the mathematical domain of an operation.
    #[error("{0}")]
    Domain(String),

    /// Input data violates a physicality requirement.
    #[error("{0}")]
    NonPhysical(String),

    /// The requested quantity has no finite-squeezing representation.
    #[error("undefined in the homodyne limit (xi = 0 or xi = +inf)")]
    HomodyneLimit,

    #[error("quadrature did not converge: residual {achieved:.3e} above {wanted:.3e}")]
    NoConvergence { achieved: f64, wanted: f64 },

    #[error("malformed state JSON at line {line}, column {column}: {msg}")]
    Json {
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("{0}")]
    BadInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
