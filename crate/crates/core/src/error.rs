use thiserror::Error;

use crate::solver::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid qubit level pair ({l}, {k}): need l < k with both in 0..3")]
    InvalidLevel { l: usize, k: usize },

    #[error("invalid occupation {occupation:?} for dims {dims:?}")]
    InvalidOccupation {
        occupation: Vec<usize>,
        dims: Vec<usize>,
    },

    #[error("matrix carries no Hilbert-space tag")]
    MissingSpace,

    #[error("hermiticity violation: {0}")]
    HermiticityViolation(String),

    #[error(
        "dispersive regime violated: detunings d1 = {delta1} MHz, d2 = {delta2} MHz must both be positive"
    )]
    DispersiveRegime { delta1: f64, delta2: f64 },

    #[error("rotating frame invalid: three-photon resonance residual {residual} MHz exceeds tolerance {tolerance} MHz")]
    FrameValidity { residual: f64, tolerance: f64 },

    #[error("invalid rate for {name}: {value}")]
    InvalidRate { name: &'static str, value: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("integration diverged at t = {time} us: {reason}")]
    IntegrationDiverged {
        time: f64,
        reason: String,
        partial: Box<Trajectory>,
    },

    #[error("Liouvillian oracle limited to dimension {max}, got {dim}")]
    OracleSize { dim: usize, max: usize },

    #[error("trajectory has no observable named `{0}`")]
    MissingObservable(String),

    #[error("maximum of `{0}` lies on the trajectory boundary; extend the horizon")]
    HorizonTooShort(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
