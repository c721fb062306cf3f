//! Baseline solvers used for comparison with the cash iteration.

mod gauss_seidel;
mod gmres;
mod gso;
mod power;

use thiserror::Error;

pub use gauss_seidel::{gauss_seidel, gauss_seidel_sweep, ColumnView};
pub use gmres::{gmres_restarted, GmresOutcome};
pub use gso::{gso_pagerank, GsoMirror, GsoSchedule, GsoState};
pub use power::power_iteration;

use crate::engine::RunTrace;
use crate::markov::MarkovError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("state {0} is absorbing (p_jj = 1)")]
    AbsorbingState(usize),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: u64, residual: f64, trace: RunTrace },
    #[error("initial vector must be nonzero")]
    ZeroStart,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Markov(#[from] MarkovError),
}

/// Final distribution plus the per-iteration trace of a baseline solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub pi: crate::markov::Distribution,
    pub trace: RunTrace,
    pub iterations: u64,
}

pub(crate) fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub(crate) fn normalize(x: &mut [f64]) {
    let s: f64 = x.iter().sum();
    if s != 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    }
}
