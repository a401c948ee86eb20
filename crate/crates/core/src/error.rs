use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("eigendecomposition of {0} did not converge")]
    EigenFailure(String),

    #[error("singular Laplacian: eigenvalue {value:e} on the complement of 1 is below {threshold:e}")]
    SingularLaplacian { value: f64, threshold: f64 },

    #[error("Laplacian row sums are not zero (max |row sum| = {0:e})")]
    NotLaplacian(f64),

    #[error("singular block: condition number {0:e} exceeds 1e12")]
    SingularBlock(f64),

    #[error("{what} is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { what: String, min_eigenvalue: f64 },

    #[error("{what} is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { what: String, min_eigenvalue: f64 },

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("invalid proximal step {0}")]
    InvalidStep(f64),

    #[error("invalid Golazo bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid penalty specification: {0}")]
    InvalidPenalty(String),

    #[error("invalid ADMM parameters: {0}")]
    InvalidParams(String),

    #[error("ADMM diverged at iteration {iteration}: non-finite {block}")]
    Divergence { iteration: usize, block: &'static str },

    #[error("fewer than two exceedance rows for coordinate {0}")]
    InsufficientExceedances(usize),

    #[error("invalid variogram: {0}")]
    InvalidVariogram(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid sample block: {0}")]
    InvalidSamples(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    /// True for failures caused by the numerics of a solve rather than by its inputs.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. } | Error::EigenFailure(_))
    }
}
