use alloc::string::String;

/// Errors raised by the synthesis and simulation kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hurwitz (max real part {max_real_part:e})")]
    NotHurwitz { max_real_part: f64 },

    #[error("pair is not observable: {0}")]
    NotObservable(String),

    #[error("pair is not controllable: {0}")]
    NotControllable(String),

    #[error("leader graph is not connected")]
    LeaderGraphDisconnected,

    #[error("Riccati equation has no stabilizing solution: {0}")]
    NoStabilizingSolution(String),

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("eigenbasis is ill-conditioned (condition number {condition:e})")]
    IllConditionedEigenbasis { condition: f64 },

    #[error("zero eigenvalue of the closed loop is not simple: {0}")]
    DefectiveZeroMode(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("trajectory overflowed (norm {norm:e} at t = {time})")]
    Overflow { norm: f64, time: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
