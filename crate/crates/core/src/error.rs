use thiserror::Error;

/// Errors raised while parsing, building, or evaluating tensor fields.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("domain error in {kind} at point {point:?}")]
    Domain { kind: &'static str, point: Vec<f64> },

    #[error("dimension {0} is not supported by this operation")]
    DimensionUnsupported(usize),

    #[error("singular metric (|det g| = {det:e}) at point {point:?}")]
    SingularMetric { det: f64, point: Vec<f64> },

    #[error("tensor rank {0} is above the supported maximum")]
    RankUnsupported(usize),

    #[error("invalid kind {0}")]
    InvalidKind(u8),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid selector `{0}`")]
    InvalidSelector(String),

    #[error("point {point:?} has length {got}, expected {expected}")]
    PointDimension {
        point: Vec<f64>,
        got: usize,
        expected: usize,
    },

    #[error("all metric components are negligible at point {0:?}")]
    AllComponentsNegligible(Vec<f64>),

    #[error("check `{check}`: {source}")]
    InCheck { check: String, source: Box<Error> },

    #[error("instance generation failed: {0}")]
    GenerationFailed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
