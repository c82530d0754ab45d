use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain construction failed: {0}")]
    Domain(String),

    #[error("shape `{0}` has no analytic convex witness set")]
    UnsupportedShape(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("grid functions live on different domains")]
    DomainMismatch,

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("reference density vanishes at cell {cell}; the Bregman divergence needs an interior point")]
    InteriorPoint { cell: usize },

    #[error("potential is not C2; {0}")]
    NotTwiceDifferentiable(&'static str),

    #[error("could not bracket the normalization multiplier after {doublings} doublings")]
    NoSolution { doublings: usize },

    #[error("bisection stalled after {iterations} steps with mass residual {residual:e}")]
    Convergence { iterations: usize, residual: f64 },

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("exponent fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
