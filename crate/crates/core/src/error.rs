use thiserror::Error;

/// Failures reported by the solvers, the simulation harness and the file loaders.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point has non-positive camera depth {0}")]
    NonPositiveDepth(f64),
    #[error("ground-truth scale must be positive, got {0}")]
    InvalidGroundTruth(f64),
    #[error("matrix is degenerate (smallest singular value {0:e})")]
    DegenerateMatrix(f64),
    #[error("control point basis is singular")]
    DegenerateControlPoints,
    #[error("need at least {needed} correspondences, got {got}")]
    TooFewCorrespondences { needed: usize, got: usize },
    #[error("null space is not one-dimensional (singular value gap {gap:.3})")]
    RankDeficient { gap: f64 },
    #[error("world points have no extent along axis {axis}")]
    AxisCollapse { axis: usize },
    #[error("no RANSAC sample produced a pose hypothesis")]
    NoHypothesisFound,
    #[error("{residuals} residuals cannot constrain {parameters} parameters")]
    InsufficientResiduals { residuals: usize, parameters: usize },
    #[error("normal equations stayed singular after damping")]
    NumericalFailure,
    #[error("could not place the point cloud inside the image after {0} attempts")]
    PlacementFailure(usize),
    #[error("anisotropic scale must be positive, got {0}")]
    InvalidScale(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
