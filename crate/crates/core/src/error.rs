use thiserror::Error;

pub type Result<T> = std::result::Result<T, TiltError>;

/// Errors raised by the tilting library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TiltError {
    #[error("matrix is empty")]
    Empty,
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("need at least 2 draws, got {0}")]
    TooFewDraws(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid functional: {0}")]
    InvalidFunctional(String),
    #[error("ratio denominator is exactly zero at draw {row}")]
    RatioDivisionByZero { row: usize },
    #[error("invalid quantile constraint: {0}")]
    InvalidQuantileConstraint(String),
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("target is infeasible on this sample: {0}")]
    InfeasibleTarget(String),
    #[error("tilted covariance is not positive definite (linearly dependent scores?)")]
    SingularHessian,
    #[error("no convergence after {iterations} iterations (gradient max-norm {grad_norm:e})")]
    MaxIterations { iterations: usize, grad_norm: f64 },
    #[error("region {index} carries no probability mass")]
    EmptyRegion { index: usize },
    #[error("score matrix is not an indicator matrix: {0}")]
    NotIndicator(String),
    #[error("invalid region probabilities: {0}")]
    InvalidRegionProbs(String),
    #[error("parameter must be positive: {0}")]
    NonPositive(String),
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
    #[error("lower bound must dominate the baseline expected scores with at least one strict increase")]
    BoundNotAboveBaseline,
}

impl TiltError {
    /// Stable, module-qualified identifier used in machine-readable reports.
    pub fn code(&self) -> &'static str {
        use TiltError::*;
        match self {
            Empty => "core::Empty",
            NonFinite { .. } => "core::NonFinite",
            TooFewDraws(_) => "core::TooFewDraws",
            DimensionMismatch { .. } => "core::DimensionMismatch",
            InvalidFunctional(_) => "scores::InvalidFunctional",
            RatioDivisionByZero { .. } => "scores::RatioDivisionByZero",
            InvalidQuantileConstraint(_) => "scores::InvalidQuantileConstraint",
            InvalidOptions(_) => "solver::InvalidOptions",
            InvalidArgument(_) => "core::InvalidArgument",
            InfeasibleTarget(_) => "solver::InfeasibleTarget",
            SingularHessian => "solver::SingularHessian",
            MaxIterations { .. } => "solver::MaxIterations",
            EmptyRegion { .. } => "quantile::EmptyRegion",
            NotIndicator(_) => "quantile::NotIndicator",
            InvalidRegionProbs(_) => "quantile::InvalidRegionProbs",
            NonPositive(_) => "analytic::NonPositive",
            NotSpd => "analytic::NotSPD",
            BoundNotAboveBaseline => "diagnostics::BoundNotAboveBaseline",
        }
    }
}
