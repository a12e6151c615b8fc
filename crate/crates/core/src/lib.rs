//! Numerical laboratory for a one-dimensional ratio-dependent predator-prey
//! system whose habitat edge is a prey-driven free boundary.
//!
//! The crate is organized around six pieces:
//!
//! - [`model`] — parameters, closed-form equilibria, iteration maps, the
//!   principal eigenvalue, the spreading barrier, and speed constants;
//! - [`pde`] — front-fixed finite-difference integration of the coupled
//!   system with the Stefan condition driving the boundary;
//! - [`steady_state`] — stationary logistic two-point boundary value problems;
//! - [`semiwave`] — the semi-wave problem whose speed is the asymptotic
//!   front speed, solved by shooting + bisection;
//! - [`classify`] — spreading/vanishing verdicts, critical-parameter
//!   bisection, speed estimation, and moving-frame diagnostics;
//! - [`compare`] — executable comparison-principle checks (explicit upper
//!   solutions and logistic sandwiches).
//!
//! [`io`] holds the CSV/JSON export formats shared with the `freefront` CLI.

pub mod classify;
pub mod compare;
pub mod error;
pub mod io;
pub mod model;
pub mod pde;
pub mod semiwave;
pub mod steady_state;

pub use classify::{ClassifyRules, Outcome, ThresholdEstimate, Verdict};
pub use compare::{ExplicitUpperSolution, OrderingReport, SandwichReport};
pub use error::{Error, Result};
pub use model::{
    EquilibriumResult, IterationTrace, ModelParams, SpeedConstants, ThresholdReport,
};
pub use pde::{InitialData, ProfileSnapshot, SimulationState, SolverConfig, TimeStep, Trajectory};
pub use semiwave::{SemiWaveProblem, SemiWaveSolution};
pub use steady_state::SteadyProfile;
