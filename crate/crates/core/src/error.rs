use thiserror::Error;

use crate::conic::SolveStatus;

/// Errors raised by the bound computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("trace {found} differs from expected {expected}")]
    InvalidTrace { expected: f64, found: f64 },

    #[error("channel is not trace preserving (max deviation of Tr_out from identity {0:.3e})")]
    NotTracePreserving(f64),

    #[error("control {index} is not unitary (deviation {deviation:.3e})")]
    NotUnitary { index: usize, deviation: f64 },

    #[error("problem dimension {dim} exceeds solver guard {limit}")]
    DimensionGuard { dim: usize, limit: usize },

    #[error("semidefinite solve ended with status {status:?}")]
    Solver { status: SolveStatus },

    #[error("malformed problem: {0}")]
    Model(String),

    #[error("no bound certifies a finite answer: {0}")]
    Unbounded(String),
}

pub type Result<T> = std::result::Result<T, Error>;
