use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("unsupported gauge body: {0}")]
    UnsupportedGauge(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The gauge search around `point` would leave the simulated region
    /// before a hit could be certified; the simulation margin is too small.
    #[error("query at {point:?} needs germs outside the populated region")]
    InsufficientMargin { point: Vec<f64> },

    #[error("eroded window is empty")]
    EmptyErodedWindow,

    #[error("weight integral diverges: {0}")]
    DivergentWeight(String),

    #[error("decay condition violated: {0}")]
    AssumptionViolated(String),

    /// A second-order empty space value fell outside its analytic bounds
    /// by more than rounding.
    #[error("bound violation: {0}")]
    BoundViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
