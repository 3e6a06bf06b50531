//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Arguments fall outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An evaluation point is not covered by the sampled grid.
    #[error("grid error: {0}")]
    Grid(String),

    /// Required endpoint data is missing and cannot be estimated.
    #[error("missing data: {0}")]
    MissingData(String),

    /// A series cannot be summed to the requested accuracy: either the
    /// term cap was reached or the estimated cancellation noise exceeds
    /// the working precision.
    #[error("series did not converge: {0}")]
    NonConvergent(String),

    /// The tail truncation search exhausted its budget.
    #[error("truncation failure: {0}")]
    Truncation(String),

    /// The image series hit its shell cap before the tail dropped below
    /// the image tolerance.
    #[error("image series did not converge: {0}")]
    ImageSeries(String),

    /// A quadrature stage failed; `term` names the solution term.
    #[error("quadrature failure in {term}: {detail}")]
    Quadrature { term: &'static str, detail: String },

    /// The corner compatibility condition is violated beyond tolerance.
    #[error("compatibility violation: {0}")]
    Compatibility(String),

    /// A linear solve encountered a vanishing pivot.
    #[error("singular system: {0}")]
    SingularSystem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
