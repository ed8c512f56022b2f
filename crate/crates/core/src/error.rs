use thiserror::Error;

use crate::qcore::ComplexMatrix;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (‖M − M†‖ = {0:.3e})")]
    NotHermitian(f64),

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    #[error("Cholesky parameters have vanishing norm (Tr T†T = {0:.3e})")]
    ZeroParameter(f64),

    #[error("measurement design is singular: rank {rank} < {required}")]
    SingularDesign { rank: usize, required: usize },

    #[error("optimizer did not converge: {diagnostic}")]
    NonConvergence {
        /// Best physical iterate found before giving up.
        best: Box<ComplexMatrix>,
        diagnostic: String,
    },

    #[error("incomplete input set: {0}")]
    IncompleteInputSet(String),

    #[error("input process is ill-conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("process matrices use different bases: {0}")]
    BasisMismatch(String),

    #[error("value {value} outside [{lo}, {hi}] for {what}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("malformed truth table: {0}")]
    MalformedTable(String),

    #[error("invalid basis encoding: {0}")]
    InvalidEncoding(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
