use thiserror::Error;

/// Errors raised across the pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("division by a jet with vanishing constant term ({0})")]
    ZeroDivisor(String),

    #[error("derivative order {order} exceeds the jet truncation order 4")]
    OrderOverflow { order: usize },

    #[error("singular state: leading factor {factor} vanishes (value {value:e})")]
    SingularState { factor: String, value: f64 },

    #[error("Abel singularity: Σ = 0 at {at}")]
    AbelSingularity { at: f64 },

    #[error("pole of {what} at {at}")]
    Pole { what: String, at: f64 },

    #[error("point {at} lies outside the validity interval [{lo}, {hi}]")]
    Extrapolation { at: f64, lo: f64, hi: f64 },

    #[error("requested interval is not monotone for Z(w); Z' vanishes at {zeros:?}")]
    Branch { zeros: Vec<f64> },

    #[error("quartic with all coefficients zero has no root pattern")]
    UndefinedPattern,

    #[error("no nondegenerate seed among {samples} samples (max |D| = {max_abs_d:e})")]
    SeedExhausted { samples: usize, max_abs_d: f64 },

    #[error("finite-difference stencil leaves the domain: {0}")]
    Stencil(String),

    #[error("invalid parameters: {0}")]
    Schema(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("consistency failure: {0}")]
    Consistency(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Schema(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
