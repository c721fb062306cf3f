//! The cash-flow iteration: initialization, pushes, history and stopping.

use std::fmt::Write as _;

use thiserror::Error;

use crate::markov::{Chain, Distribution};
use crate::schedule::{GreenLight, ScheduleError, Selection};

/// How many times a degenerate history may trigger a restart.
pub const MAX_GUARD_RETRIES: usize = 3;
/// Relative size below which the total history counts as zero.
pub const GUARD_FACTOR: f64 = 1e-12;

const TRACE_HEADER: &str = "step,updates,cum_cost,scan_cost,cash_l1,err_l1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("initial distribution has length {got}, chain has {expected} nodes")]
    InvalidM0 { expected: usize, got: usize },
    #[error("total history {0} is too close to zero to normalize")]
    ZeroTotalHistory(f64),
    #[error("history stayed degenerate after {retries} restarts")]
    DegenerateHistory { retries: usize },
    #[error("no convergence after {steps} steps (cash l1 {cash_l1:.3e})")]
    NoConvergence { steps: u64, cash_l1: f64, partial: Box<RunOutcome> },
    #[error("node {index} out of range for {n} nodes")]
    InvalidNode { index: usize, n: usize },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Signed cash and history vectors plus cost counters.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub cash: Vec<f64>,
    pub history: Vec<f64>,
    /// Step counter; 1 right after initialization.
    pub t: u64,
    /// Movement cost in edge-operation units.
    pub cum_cost: f64,
    /// Entries inspected by the schedule.
    pub scan_cost: u64,
    /// Number of single-node pushes performed.
    pub updates: u64,
    pub total_history: f64,
    pub initial_mass: f64,
    cash_l1: f64,
    since_resync: usize,
}

impl SolverState {
    /// `C_1 = M_0 P - M_0`, `H_1 = M_0`, `t = 1`.
    pub fn init(chain: &dyn Chain, m0: &Distribution) -> Result<Self, EngineError> {
        let n = chain.len();
        if m0.len() != n {
            return Err(EngineError::InvalidM0 { expected: n, got: m0.len() });
        }
        let m = m0.as_slice();
        let mut cash = chain.left_mul(m);
        for (c, &mi) in cash.iter_mut().zip(m) {
            *c -= mi;
        }
        let cum_cost = m.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, _)| chain.volume(i)).sum();
        let updates = m.iter().filter(|&&v| v != 0.0).count() as u64;
        let cash_l1 = cash.iter().map(|c| c.abs()).sum();
        Ok(Self {
            cash,
            history: m.to_vec(),
            t: 1,
            cum_cost,
            scan_cost: 0,
            updates,
            total_history: m.iter().sum(),
            initial_mass: m.iter().map(|v| v.abs()).sum(),
            cash_l1,
            since_resync: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.cash.len()
    }

    /// Absolute cash, tracked incrementally between periodic recomputations.
    pub fn cash_l1(&self) -> f64 {
        self.cash_l1
    }

    pub fn exact_cash_l1(&self) -> f64 {
        self.cash.iter().map(|c| c.abs()).sum()
    }

    pub fn cash_sum(&self) -> f64 {
        self.cash.iter().sum()
    }

    fn resync(&mut self) {
        self.cash_l1 = self.exact_cash_l1();
        self.since_resync = 0;
    }

    /// Gives green light to `nodes`: each pushes its full cash along its row.
    /// Zero-cash nodes are ignored and cost nothing.
    pub fn step(&mut self, chain: &dyn Chain, nodes: &[usize]) -> Result<(), EngineError> {
        let n = self.n();
        if let Some(&index) = nodes.iter().find(|&&i| i >= n) {
            return Err(EngineError::InvalidNode { index, n });
        }
        self.t += 1;
        match nodes {
            [] => {}
            &[i] => self.push_single(chain, i),
            _ => self.push_set(chain, nodes),
        }
        Ok(())
    }

    /// A step with no green light.
    pub fn idle(&mut self) {
        self.t += 1;
    }

    fn push_single(&mut self, chain: &dyn Chain, i: usize) {
        let x = self.cash[i];
        if x == 0.0 {
            return;
        }
        self.history[i] += x;
        self.total_history += x;
        self.cum_cost += chain.volume(i);
        self.updates += 1;
        let mut l1 = self.cash_l1 - x.abs();
        self.cash[i] = 0.0;
        let cash = &mut self.cash;
        chain.for_each_entry(i, &mut |j, p| {
            let old = cash[j];
            let new = old + x * p;
            cash[j] = new;
            l1 += new.abs() - old.abs();
        });
        self.cash_l1 = l1.max(0.0);
        self.since_resync += 1;
        if self.since_resync >= n_resync(self.n()) {
            self.resync();
        }
    }

    fn push_set(&mut self, chain: &dyn Chain, nodes: &[usize]) {
        // M_t is read in full before any cash moves.
        let mut moves = Vec::with_capacity(nodes.len());
        for &i in nodes {
            let x = self.cash[i];
            if x != 0.0 {
                moves.push((i, x));
                self.cash[i] = 0.0;
            }
        }
        if moves.is_empty() {
            return;
        }
        for &(i, x) in &moves {
            self.history[i] += x;
            self.total_history += x;
            self.cum_cost += chain.volume(i);
        }
        self.updates += moves.len() as u64;
        chain.push_many(&moves, &mut self.cash);
        self.resync();
    }

    /// `H / (H 1)`; entries may be negative.
    pub fn estimate(&self) -> Result<Vec<f64>, EngineError> {
        let total: f64 = self.history.iter().sum();
        if total.abs() <= self.guard_threshold() {
            return Err(EngineError::ZeroTotalHistory(total));
        }
        Ok(self.history.iter().map(|h| h / total).collect())
    }

    /// `|H 1|` at or below this value is treated as zero.
    pub fn guard_threshold(&self) -> f64 {
        GUARD_FACTOR * self.t as f64 * self.initial_mass
    }

    pub fn history_degenerate(&self) -> bool {
        self.total_history.abs() <= self.guard_threshold()
    }
}

fn n_resync(n: usize) -> usize {
    n.max(256)
}

/// Stopping rule for [`run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Stop when the absolute cash falls below the threshold.
    Cash(f64),
    /// Stop when successive estimates differ by less than the threshold in l1.
    PiHat(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub criterion: Criterion,
    pub max_steps: u64,
    /// Trace every `stride` pushes; `None` means every n pushes.
    pub stride: Option<u64>,
}

impl StopRule {
    pub fn cash(eps: f64, max_steps: u64) -> Self {
        Self { criterion: Criterion::Cash(eps), max_steps, stride: None }
    }

    pub fn with_stride(mut self, stride: u64) -> Self {
        self.stride = Some(stride.max(1));
        self
    }
}

/// One trace line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub step: u64,
    pub updates: u64,
    pub cum_cost: f64,
    pub scan_cost: u64,
    pub cash_l1: f64,
    pub err_l1: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for r in &self.records {
            let err = r.err_l1.map(|e| format!("{e:e}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{:e},{}", r.step, r.updates, r.cum_cost, r.scan_cost, r.cash_l1, err);
        }
        out
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub pi_hat: Vec<f64>,
    pub trace: RunTrace,
    pub state: SolverState,
    pub restarts: usize,
    pub converged: bool,
}

/// Optional oracle used to fill the trace's error column.
pub type Oracle<'a> = Option<&'a [f64]>;

fn record(state: &SolverState, oracle: Oracle) -> TraceRecord {
    let err_l1 = oracle.and_then(|pi| {
        state.estimate().ok().map(|est| est.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum())
    });
    TraceRecord {
        step: state.t,
        updates: state.updates,
        cum_cost: state.cum_cost,
        scan_cost: state.scan_cost,
        cash_l1: state.exact_cash_l1(),
        err_l1,
    }
}

enum Attempt {
    Done(RunOutcome),
    Degenerate,
}

/// Runs init plus steps until the stop rule fires.
///
/// A degenerate history (`H 1` near zero) restarts the run with a perturbed
/// schedule, at most [`MAX_GUARD_RETRIES`] times.
pub fn run(
    chain: &dyn Chain,
    schedule: &mut dyn GreenLight,
    m0: &Distribution,
    stop: StopRule,
) -> Result<RunOutcome, EngineError> {
    run_with_oracle(chain, schedule, m0, stop, None)
}

pub fn run_with_oracle(
    chain: &dyn Chain,
    schedule: &mut dyn GreenLight,
    m0: &Distribution,
    stop: StopRule,
    oracle: Oracle,
) -> Result<RunOutcome, EngineError> {
    for restarts in 0..=MAX_GUARD_RETRIES {
        schedule.reset();
        match attempt(chain, schedule, m0, stop, oracle, restarts)? {
            Attempt::Done(out) => return Ok(out),
            Attempt::Degenerate => schedule.perturb(),
        }
    }
    Err(EngineError::DegenerateHistory { retries: MAX_GUARD_RETRIES })
}

fn attempt(
    chain: &dyn Chain,
    schedule: &mut dyn GreenLight,
    m0: &Distribution,
    stop: StopRule,
    oracle: Oracle,
    restarts: usize,
) -> Result<Attempt, EngineError> {
    let mut state = SolverState::init(chain, m0)?;
    let n = chain.len() as u64;
    let stride = stop.stride.unwrap_or(n).max(1);
    let mut trace = RunTrace { records: vec![record(&state, oracle)] };
    let mut next_mark = state.updates + stride;
    let mut prev_est: Option<Vec<f64>> = None;
    let near = |eps: f64| 4.0 * eps;

    loop {
        if state.history_degenerate() {
            return Ok(Attempt::Degenerate);
        }
        let converged = match stop.criterion {
            Criterion::Cash(eps) => {
                if state.cash_l1 < near(eps) {
                    state.resync();
                }
                state.cash_l1 < eps
            }
            Criterion::PiHat(eps) => {
                let est = state.estimate()?;
                // a push of zero cash leaves the estimate untouched; not evidence
                let done = prev_est.as_ref().is_some_and(|p| {
                    let d: f64 = p.iter().zip(&est).map(|(a, b)| (a - b).abs()).sum();
                    d > 0.0 && d < eps
                });
                prev_est = Some(est);
                done || state.exact_cash_l1() == 0.0
            }
        };
        if converged || state.t > stop.max_steps {
            if trace.last().map(|r| r.step) != Some(state.t) {
                trace.records.push(record(&state, oracle));
            }
            let pi_hat = state.estimate()?;
            let outcome = RunOutcome { pi_hat, trace, state, restarts, converged };
            if converged {
                return Ok(Attempt::Done(outcome));
            }
            return Err(EngineError::NoConvergence {
                steps: outcome.state.t,
                cash_l1: outcome.state.exact_cash_l1(),
                partial: Box::new(outcome),
            });
        }
        let pick = schedule.select(state.t - 1, &state.cash, chain)?;
        state.scan_cost += pick.scanned;
        match pick.selection {
            Selection::Set(nodes) => state.step(chain, &nodes)?,
            Selection::Skip => state.idle(),
        }
        if state.updates >= next_mark {
            trace.records.push(record(&state, oracle));
            next_mark = state.updates + stride;
        }
    }
}
