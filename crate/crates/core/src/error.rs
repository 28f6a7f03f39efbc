use thiserror::Error;

/// Errors raised by the linear-algebra layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index space overflow while building a {rows}x{cols} operator")]
    IndexOverflow { rows: usize, cols: usize },
    #[error(
        "Cholesky breakdown at pivot {pivot} (value {value:e}); the matrix is not positive \
         definite to working precision, consider a positive diagonal shift"
    )]
    FactorizationBreakdown { pivot: usize, value: f64 },
    #[error("conjugate gradient did not converge in {iterations} iterations (residual {residual:e})")]
    CgNotConverged { iterations: usize, residual: f64 },
    #[error("invalid solver option: {0}")]
    InvalidOption(String),
}

/// Errors raised by penalties, problems and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("derivative of the power-law penalty is unbounded at t = 0 for tau < 1")]
    DerivativeDomain,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("problem is not coercive: {0}")]
    NotCoercive(String),
    #[error("linear solve failed at stage {stage}, iteration {iteration}: {source}")]
    InnerSolve {
        stage: usize,
        iteration: usize,
        #[source]
        source: LinalgError,
    },
    #[error(
        "monotone descent violated at stage {stage}, iteration {iteration}: \
         J_eps went from {before:e} to {after:e}"
    )]
    DescentViolation {
        stage: usize,
        iteration: usize,
        before: f64,
        after: f64,
    },
    #[error(
        "quantified descent inequality violated at stage {stage}, iteration {iteration}: \
         lhs {lhs:e} > rhs {rhs:e}"
    )]
    DescentInequality {
        stage: usize,
        iteration: usize,
        lhs: f64,
        rhs: f64,
    },
    #[error("solver diverged: objective became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("solver precondition failed: {0}")]
    Unsupported(String),
    #[error("at t = {time}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("non-finite value {value} in row {row}, column {column:?}")]
    NonFinite { row: usize, column: String, value: String },
    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
