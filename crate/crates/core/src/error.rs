use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bisection did not converge within {0} iterations")]
    BisectionFailed(usize),

    #[error("degenerate parameter x2 = {0:e} (|x2| must be at least 1e-6)")]
    DegenerateParameter(f64),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("initial point is infeasible for the regularizer (h(x0) = {0})")]
    InfeasibleStart(f64),

    #[error("non-finite objective at iteration {iter}: f = {f}, h = {h}")]
    NonFinite { iter: usize, f: f64, h: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
