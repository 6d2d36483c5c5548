//! Error type shared by all modules.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("curvature mismatch: {left} vs {right}")]
    CurvatureMismatch { left: f64, right: f64 },

    #[error("invalid curvature {k}: {reason}")]
    InvalidCurvature { k: f64, reason: &'static str },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("vector is not tangent at the base point (inner product {0:e})")]
    NotTangent(f64),

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular gradient: query {query} coincides with a prototype")]
    SingularGradient { query: usize },

    #[error("quadrature failed to converge: {0}")]
    QuadratureDiverged(String),

    #[error("training diverged at episode {episode}: {detail}")]
    TrainingDiverged { episode: usize, detail: String },

    #[error("configuration error: {0}")]
    Config(String),
}
