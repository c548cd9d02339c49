use thiserror::Error;

/// Errors produced by series construction, embedding, estimation and
/// simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time series too short: n={n}, but the query needs n > s + p = {required}")]
    SeriesTooShort { n: usize, required: usize },

    #[error("too few samples: need at least {required}, got {actual}")]
    TooFewSamples { required: usize, actual: usize },

    #[error("component index {index} out of range (series has {count} components)")]
    ComponentOutOfRange { index: usize, count: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("duplicate component name `{0}`")]
    DuplicateName(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("component {component} is degenerate (zero empirical standard deviation)")]
    DegenerateSeries { component: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown builtin model id {0} (valid ids are 1..=6)")]
    UnknownModel(u32),

    #[error("invalid structural model: {0}")]
    InvalidModel(String),

    #[error("trajectory diverged to a non-finite value at step {step}, component {component}")]
    NonFiniteTrajectory { step: usize, component: usize },

    #[error("misaligned effect curves: {0}")]
    MisalignedCurves(String),
}

pub type Result<T> = std::result::Result<T, Error>;
