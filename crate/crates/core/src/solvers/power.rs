use super::{l1_diff, SolveOutcome, SolverError};
use crate::engine::{RunTrace, TraceRecord};
use crate::markov::{Chain, Distribution};

/// Iterates `x <- x P` until successive iterates differ by less than `eps` in l1.
/// Each iteration costs the chain's total volume.
pub fn power_iteration(chain: &dyn Chain, x0: &Distribution, eps: f64, max_iters: u64) -> Result<SolveOutcome, SolverError> {
    let n = chain.len();
    if x0.len() != n {
        return Err(SolverError::Dimension { expected: n, got: x0.len() });
    }
    let sweep = chain.total_volume();
    let mut x = x0.as_slice().to_vec();
    let mut trace = RunTrace::default();
    let mut cost = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters {
        let next = chain.left_mul(&x);
        residual = l1_diff(&next, &x);
        x = next;
        cost += sweep;
        trace.records.push(TraceRecord {
            step: it,
            updates: it * n as u64,
            cum_cost: cost,
            scan_cost: 0,
            cash_l1: residual,
            err_l1: None,
        });
        if residual < eps {
            return Ok(SolveOutcome { pi: Distribution::normalized(x)?, trace, iterations: it });
        }
    }
    Err(SolverError::NoConvergence { iterations: max_iters, residual, trace })
}
