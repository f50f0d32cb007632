use num_complex::Complex64;

use crate::cauchy::SolutionBundle;
use crate::semilinear::IterationTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("resolvent is singular at lambda = {lambda}")]
    SingularResolvent { lambda: Complex64 },
    #[error("eigenvector matrix is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("function is not finite at eigenvalue {eigenvalue}")]
    FunctionSingularOnSpectrum { eigenvalue: Complex64 },
    #[error("square root is inconsistent: relative defect {defect:e}")]
    InconsistentSquareRoot { defect: f64 },
    #[error("operator is not sectorial: eigenvalue {eigenvalue} lies on (-inf, 0]")]
    NotSectorial { eigenvalue: Complex64 },
    #[error("quadrature did not converge (last relative change {change:e})")]
    QuadratureNotConverged { change: f64 },
    #[error("z = {z} lies on the branch cut [0, inf)")]
    BranchCutViolation { z: Complex64 },
    #[error("exponent out of range: {0}")]
    ExponentOutOfRange(String),
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("split identity violated: relative discrepancy {discrepancy:e}")]
    SplitIdentityViolation { discrepancy: f64 },
    #[error("outer offset r = {r} must exceed twice the inner offset c = {c}")]
    ContourOrderViolation { c: f64, r: f64 },
    #[error("gamma = {gamma} must exceed the strip half-width {strip}")]
    GammaTooSmall { gamma: f64, strip: f64 },
    #[error("problem not admissible: {0}")]
    NotAdmissible(String),
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("relative residual {} exceeds tolerance {}", .0.residual, .0.tolerance)]
    ResidualTooLarge(Box<SolutionBundle>),
    #[error("fixed point iteration hit the iteration cap after {} iterations", .0.iterations)]
    MaxIterationsExceeded(Box<IterationTrace>),
    #[error("iterate left the ball of radius {radius} around the seed")]
    BallExit { radius: f64, trace: Box<IterationTrace> },
    #[error("fixed point iteration diverged (successive ratios above 1.5)")]
    Diverged(Box<IterationTrace>),
    #[error("state norm exceeded 1e12 at t = {t}")]
    OverflowDetected { t: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("csv parse error: {0}")]
    Csv(String),
}

impl Error {
    pub fn trace(&self) -> Option<&IterationTrace> {
        match self {
            Error::MaxIterationsExceeded(t) | Error::Diverged(t) => Some(t),
            Error::BallExit { trace, .. } => Some(trace),
            _ => None,
        }
    }
}
