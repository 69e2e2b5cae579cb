use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("the identity has no eigenbasis; expected one of X, Y, Z")]
    IdentityBasis,
    #[error("matrix is not Hermitian (max entry deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    TraceNotOne(f64),
    #[error("matrix has negative eigenvalue {0:e}")]
    NotPositive(f64),
    #[error("map is not trace preserving (max deviation {0:e})")]
    NotTracePreserving(f64),
    #[error("map is not completely positive (min Choi eigenvalue {0:e})")]
    NotCompletelyPositive(f64),
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("unknown channel `{0}` (expected CNOT, DEPHASE, L1, L2 or L3)")]
    UnknownChannel(String),
    #[error("unknown noise model `{0}` (expected werner, zx_dephase, depolarize or local_flip)")]
    UnknownNoiseModel(String),
    #[error("table setting {found} does not match the required setting {expected}")]
    SettingMismatch { expected: String, found: String },
    #[error("invalid probability table: {0}")]
    InvalidTable(String),
    #[error("invalid counts: {0}")]
    Counts(String),
    #[error("schema error at {path}: {reason}")]
    Schema { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Whether the error stems from file access or file contents rather than
    /// from the numbers themselves.
    pub fn is_io_or_schema(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Json(_) | Error::Schema { .. })
    }
}
