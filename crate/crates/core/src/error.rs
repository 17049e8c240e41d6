use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("unsupported gate `{0}`")]
    UnsupportedGate(String),

    #[error("resource limit: {what} ({requested} > cap {cap})")]
    ResourceLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("fit failed for {context}: {reason}")]
    Fit { context: String, reason: String },

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("basis error: {observable} is not diagonal in measurement basis {basis}")]
    Basis { observable: String, basis: String },

    #[error("numeric failure after {iterations} iterations (residual {residual:.3e}): {reason}")]
    Numeric {
        reason: String,
        iterations: usize,
        residual: f64,
    },

    #[error("readout mitigation error: {0}")]
    Mitigation(String),

    #[error("decomposition infeasible (residual norm {residual:.3e})")]
    Decomposition { residual: f64 },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("executor error: {0}")]
    Executor(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
