use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval: lower endpoint {lo} exceeds upper endpoint {hi}")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("interval endpoints not finite: [{lo}, {hi}]")]
    NonFiniteInterval { lo: f64, hi: f64 },

    #[error("could not parse interval from {0:?}")]
    IntervalParse(String),

    #[error("objective {objective}: lower endpoint {lower} exceeds upper endpoint {upper}")]
    EndpointOrderViolation {
        objective: usize,
        lower: f64,
        upper: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quadratic program is infeasible")]
    QpInfeasible,

    #[error("quadratic program did not converge within {iterations} iterations")]
    QpNotConverged { iterations: usize },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("direction is not a descent direction (psi = {psi})")]
    NotDescentDirection { psi: f64 },

    #[error("degenerate beta denominator {0:e}")]
    DegenerateDenominator(f64),

    #[error("unknown problem {0:?}")]
    UnknownProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
