//! Simulator and library for distributed quasi-Newton (DQN) consensus
//! optimization with randomized node idling.
//!
//! The library builds connected random geometric graphs with Metropolis
//! weights, generates strongly convex quadratic cost families, evaluates the
//! penalty reformulation of the consensus problem, assembles the block
//! Hessian splitting together with its theoretical constants, and runs the
//! standard and idling variants of the DQN iteration as deterministic,
//! seedable state machines. The `harness` module drives the experiment
//! recipes (schedule comparisons, cost histograms, step-size sweeps) and
//! writes plot-ready CSV traces.

pub mod harness;
pub mod objective;
pub mod rng;
pub mod schedule;
pub mod solver;
pub mod splitting;
pub mod topology;

pub use objective::{PenaltyModel, QuadraticProblem};
pub use schedule::ActivationSchedule;
pub use solver::{LambdaPolicy, RunTrace, SolverConfig};
pub use splitting::TheoryConstants;
pub use topology::WeightedGraph;

/// Formats a float with 17 significant digits, enough to round-trip `f64`
/// exactly through its decimal representation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
