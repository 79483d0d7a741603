//! Crate-wide error type.

use thiserror::Error;

use crate::param::ParamVec;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is outside its admissible range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Step-size cap for the chain type is violated.
    #[error("step-size cap violated ({chain}): requires {bound}, got eta0 = {eta0} > {cap}")]
    StepCap {
        chain: &'static str,
        bound: &'static str,
        eta0: f64,
        cap: f64,
    },

    /// The running partition estimate overflowed; the objective is not integrable.
    #[error("partition function diverged: log Z estimate {log_z} exceeds guard {guard}")]
    DivergedPartition { log_z: f64, guard: f64 },

    /// The kernel has no tail guarantee and cannot be used in a density.
    #[error("kernel rejected: {0}")]
    KernelRejected(String),

    #[error("chain diverged at step {step}: |x| = {norm} exceeds confinement radius {radius}")]
    ChainDivergence { step: usize, norm: f64, radius: f64 },

    /// Non-finite state; carries the last finite diagnostics when available.
    #[error("non-finite state at step {step}")]
    NumericAbort {
        step: usize,
        last_good: Option<Box<crate::dual_loop::StepDiagnostics>>,
    },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("unsupported algorithm: {0}")]
    UnsupportedAlgorithm(String),

    #[error("sweep grid has {size} runs, above cap {cap}")]
    GridTooLarge { size: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn check_dim(expected: usize, x: &ParamVec) -> Result<()> {
        if x.len() == expected {
            Ok(())
        } else {
            Err(Error::Dimension { expected, got: x.len() })
        }
    }
}
