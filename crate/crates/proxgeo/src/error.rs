use thiserror::Error;

use crate::space::SpacePoint;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A point payload does not belong to the space it was used with.
    #[error("point not in space: {0}")]
    PointNotInSpace(String),

    /// A scalar or structural argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A space, set, functional or operator description failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The operation is undefined for the given space (e.g. metric
    /// projection on the l-infinity plane).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// An iterate left the declared domain of an operator.
    #[error("iterate left the operator domain at step {step}")]
    DomainViolation { step: usize },

    /// An inner solver stopped before reaching the requested tolerance.
    /// The best iterate found so far is carried along.
    #[error("solver did not converge: achieved {achieved:e}, requested {requested:e}")]
    NonConvergence {
        best: Box<SpacePoint>,
        achieved: f64,
        requested: f64,
    },

    /// An orbit exceeded the configured boundedness cap.
    #[error("orbit unbounded: distance {distance:.3e} from the start exceeded the cap {cap:.3e} at step {step}")]
    UnboundedOrbit { step: usize, distance: f64, cap: f64 },

    /// Not enough data for the requested analysis.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("empty input: {0}")]
    EmptyInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
