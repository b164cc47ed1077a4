use std::io;

use num_complex::Complex64;
use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),

    #[error(
        "eigensolver did not converge after {iterations} iterations \
         (residual {residual:.3e}, best estimate {estimate})"
    )]
    Convergence {
        iterations: usize,
        residual: f64,
        estimate: Complex64,
    },

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("unsupported replica variant {variant} for n = {n}: {reason}")]
    UnsupportedVariant {
        n: usize,
        variant: String,
        reason: &'static str,
    },

    #[error("operator is not positive semidefinite (eigenvalue {0:.3e})")]
    Positivity(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("size guard: {what} = {value} exceeds the limit {limit}")]
    SizeGuard {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("tensor is not normalized: leading transfer eigenvalue {eigenvalue:.6e}; rescale by {suggested_factor:.6e}")]
    Normalization {
        eigenvalue: f64,
        suggested_factor: f64,
    },

    #[error("degenerate eigenvector overlap {0:.3e}; the tensor is probably not normal")]
    DegenerateOverlap(f64),

    #[error("leading transfer eigenvalue is degenerate (gap ratio {0:.9})")]
    DegenerateSpectrum(f64),

    #[error("fixture construction failed: {0}")]
    Fixture(String),

    #[error("maximum lies on the grid edge at h = {0}; extend the grid")]
    Bracket(f64),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("incomplete input: {0}")]
    IncompleteInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
