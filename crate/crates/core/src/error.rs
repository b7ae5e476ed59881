use thiserror::Error;

/// Errors raised by the geometry primitives, the estimators and the benchmark harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point lies on (or numerically next to) the line a homography sends to infinity.
    #[error("point ({x}, {y}) projects to the horizon of the homography")]
    HorizonDegenerate { x: f64, y: f64 },

    #[error("homography is singular (|det| = {det:e})")]
    SingularModel { det: f64 },

    /// The design matrix of a fit is rank deficient, or the fitted model is singular.
    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),

    #[error("need at least {needed} matches, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("no valid hypothesis was generated")]
    NoValidHypothesis,

    #[error("cannot aggregate an empty cloud")]
    EmptyCloud,

    #[error("unknown model kind `{0}`")]
    UnknownModelKind(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite coordinate")]
    NonFinite,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
