use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value encountered at step {step}")]
    NonFinite { step: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("sequence length {0} is odd")]
    OddLength(usize),
    #[error("requested {requested} modes but at most {max} are available")]
    TooManyModes { requested: usize, max: usize },
    #[error("singular normal equations")]
    SingularSystem,
    #[error("empty input")]
    EmptyInput,
    #[error("context window too short: need {needed} samples, got {got}")]
    WindowTooShort { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
