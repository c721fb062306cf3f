//! Cash-flow iteration for stationary distributions of Markov chains.
//!
//! Each step picks a green-light set of nodes, moves their cash into the
//! history and spreads it along their rows. The normalized history converges
//! to the stationary distribution for any schedule that keeps visiting every
//! node.

pub mod analysis;
pub mod engine;
pub mod markov;
pub mod mdp;
pub mod models;
pub mod schedule;
pub mod solvers;

pub use engine::{run, run_with_oracle, EngineError, RunOutcome, SolverState, StopRule};
pub use markov::{Chain, Distribution, GoogleMatrix, TransitionMatrix};
pub use schedule::{GreenLight, Schedule};
