use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    /// Columns are reported 1-based, matching libsvm feature indices.
    #[error("design matrix has all-zero columns {columns:?} (1-based)")]
    ZeroColumns { columns: Vec<usize> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("solver did not converge after {iterations} iterations (kkt residual {kkt_residual:e})")]
    NonConvergence { iterations: usize, kkt_residual: f64 },

    #[error("failed to bracket the level-set boundary after {steps} steps (last tau {tau:e}, loss {loss}, nu {nu})")]
    BracketFailure { steps: usize, tau: f64, loss: f64, nu: f64 },

    #[error("loss is not monotone in the multiplier between tau {tau_lo:e} and {tau_hi:e} (mid loss {loss_mid}, bracket [{loss_hi}, {loss_lo}])")]
    NonMonotone {
        tau_lo: f64,
        tau_hi: f64,
        loss_lo: f64,
        loss_hi: f64,
        loss_mid: f64,
    },

    #[error("boundary tolerance not reached after {0} bisection steps")]
    BisectionExhausted(usize),

    #[error("{failed} of {total} directions failed (limit is 10%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }
}
