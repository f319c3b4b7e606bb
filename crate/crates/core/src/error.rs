use thiserror::Error;

use crate::schedule::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("degenerate projection onto the computational subspace (weight {weight:.3e})")]
    DegenerateProjection { weight: f64 },

    #[error("levels {0} and {1} are not connected by the {2} drive")]
    DisconnectedPair(String, String, &'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("DD sequences need an even number of pulses, got {0}")]
    OddPulseCount(usize),

    #[error("engine configuration: {0}")]
    Config(String),

    #[error("inconsistent tomography data: Bloch vector norm {0:.4}")]
    InconsistentTomography(f64),

    #[error("θ = {0} rad is not a multiple of 2π")]
    ThetaNotMultipleOfTwoPi(f64),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
