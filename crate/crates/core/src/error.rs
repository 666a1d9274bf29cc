use thiserror::Error;

/// Errors raised by the simulation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("support at x = {0} m does not coincide with a mesh node")]
    SupportOffMesh(f64),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("natural frequency must be positive, got {0} rad/s")]
    InvalidFrequency(f64),

    #[error("effective stiffness is not symmetric positive definite")]
    FactorizationFailure,

    #[error("shape mismatch: expected length {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid roughness specification: {0}")]
    InvalidSpec(String),

    #[error("position x = {0} m lies outside the bridge")]
    OffBridge(f64),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("unknown study `{0}`")]
    UnknownStudy(String),

    #[error("window [{0}, {1}] s selects no samples")]
    EmptyWindow(f64, f64),

    #[error("reference series has zero variance over the window; R² is undefined")]
    DegenerateReference,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
