use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants split into two families: domain errors (bad inputs, guards,
/// branch cuts) and numerical failures (quadrature that did not converge,
/// eigensolver breakdown). The CLI maps the first family to exit code 2 and
/// the second to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("value out of floating-point range: {0}")]
    Range(String),

    #[error("singular point: {0}")]
    Singular(String),

    #[error("branch cut crossed: {0}")]
    BranchCut(String),

    #[error("dimension guard exceeded: {0}")]
    Guard(String),

    #[error("quadrature did not converge: estimated error {achieved:.3e} > requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("numerical domain violated: {0}")]
    NumericalDomain(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of a numerical method rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. } | Error::NumericalDomain(_) | Error::Eigen(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
