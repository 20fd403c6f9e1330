use thiserror::Error;

/// Errors produced by measure construction, solvers, and evaluators.
///
/// Variants split into two families: rejected inputs (the caller handed us
/// something that violates a precondition) and internal failures (a solver
/// could not certify its own result). CLI exit codes key off this split.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected points in R^{expected}, got R^{got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("weights are not a probability vector (sum = {sum}, min = {min})")]
    NotOnSimplex { sum: f64, min: f64 },

    #[error("empty support: a measure needs at least one point")]
    EmptySupport,

    #[error("class {0} has no points")]
    EmptyClass(String),

    #[error("cannot form {k} clusters from {distinct} distinct points")]
    DegenerateClustering { distinct: usize, k: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "exact solver did not certify optimality after {iterations} pivots \
         (best reduced cost {reduced_cost:.3e})"
    )]
    ExactSolverStalled { iterations: usize, reduced_cost: f64 },

    #[error(
        "sinkhorn failed in both scaling and log domain after {iterations} iterations \
         (marginal violation {violation:.3e})"
    )]
    SinkhornFailed { iterations: usize, violation: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by invalid caller input rather than solver internals.
    pub fn is_rejected_input(&self) -> bool {
        !matches!(
            self,
            Error::ExactSolverStalled { .. } | Error::SinkhornFailed { .. } | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
