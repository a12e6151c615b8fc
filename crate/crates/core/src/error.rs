//! Error type shared by all solvers in this crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by origin: input validation (`InvalidParameter`,
/// `OutOfRegime`, `Domain`), time-stepping failures (`NumericalBlowup`,
/// `StefanViolation`, `ClampBudget`), stationary/wave solver failures
/// (`SolverFailure`, `BracketFailure`), and post-processing
/// (`BracketError`, `PropertyViolation`, `EstimateUnavailable`).
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A regime inequality required by the operation does not hold.
    #[error("out of regime: {0}")]
    OutOfRegime(String),

    /// An argument violated a mathematical precondition (e.g. a negative density).
    #[error("domain error: {0}")]
    Domain(String),

    /// A non-finite value appeared in a profile during time stepping.
    #[error("numerical blow-up at t = {t}, grid index {index}")]
    NumericalBlowup { t: f64, index: usize },

    /// The computed front speed was negative, which the Stefan condition forbids.
    #[error("Stefan violation at t = {t}: h' = {h_prime}")]
    StefanViolation { t: f64, h_prime: f64 },

    /// Negative-value clamping exceeded its budget (0.1% of grid-steps),
    /// indicating a genuinely unstable run rather than rounding noise.
    #[error("negative-density clamping exceeded budget: {clamped} of {total} grid-steps")]
    ClampBudget { clamped: u64, total: u64 },

    /// An iterative solver stopped making progress.
    #[error("solver failed to converge: final residual {residual}")]
    SolverFailure { residual: f64 },

    /// A required simulation aborted; the message carries the recorded cause.
    #[error("simulation failed: {0}")]
    RunFailed(String),

    /// Both shooting-bracket endpoints classified identically.
    #[error("bracket failure: {0}")]
    BracketFailure(String),

    /// A bisection bracket had invalid endpoint verdicts.
    #[error("bracket error: {0}")]
    BracketError(String),

    /// An ordering guaranteed by the comparison principle was violated
    /// beyond the discretization tolerance.
    #[error("property violation in {check}: margin {margin:.3e} at t = {t}, x = {x}")]
    PropertyViolation {
        check: String,
        margin: f64,
        t: f64,
        x: f64,
    },

    #[error("speed estimate unavailable: {0}")]
    EstimateUnavailable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
