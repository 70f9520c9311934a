use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The chain is too short to ever reach around the origin.
    #[error("infeasible polymer: n*l0 = {reach} does not exceed L = {offset}")]
    Infeasible { reach: f64, offset: f64 },

    #[error("expected {expected} angles, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// The initial configuration has already completed a turn.
    #[error("initial configuration is winding: |phi(0)| = {0} >= 2*pi")]
    WindingStart(f64),

    #[error("path came within {0} of the origin")]
    OriginFailure(f64),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("all {0} replicates failed (timeout or origin failure)")]
    AllReplicatesFailed(usize),
}
