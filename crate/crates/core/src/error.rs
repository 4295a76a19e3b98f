use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("moments available up to degree {available}, but degree {required} is needed")]
    MissingMoments { available: u32, required: u32 },

    #[error("no replacement given for variable {0}")]
    MissingReplacement(usize),

    #[error("polynomial parse error in {input:?}: {message}")]
    Parse { input: String, message: String },

    #[error("invalid interval [{lo}, {hi}]: lower bound must be below upper bound")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("degree mismatch between moment sequences: {0} vs {1}")]
    DegreeMismatch(u32, u32),

    #[error("relaxation order {given} is too small; the minimum is {required}")]
    OrderTooSmall { given: u32, required: u32 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("moment sequence has zero mass")]
    ZeroMass,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown {kind} {name:?} (registered: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("SDP format error at line {line}: {message}")]
    SdpFormat { line: usize, message: String },

    #[error("solver returned status {status:?}")]
    Solver { status: crate::sdp::SolverStatus },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
