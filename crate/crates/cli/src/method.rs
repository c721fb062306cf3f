//! Solver descriptors shared by `solve` and `bench`.

use rlgl_core::engine::{run_with_oracle, Criterion, EngineError, RunTrace, StopRule};
use rlgl_core::markov::Distribution;
use rlgl_core::schedule::{parse_block_sequence, Schedule, ScheduleKind};
use rlgl_core::solvers::{gauss_seidel, gmres_restarted, gso_pagerank, power_iteration, GsoSchedule, SolverError};

use crate::problem::Problem;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Rlgl(String),
    Power,
    GaussSeidel,
    Gmres(usize),
    Gso(GsoSchedule),
}

impl Method {
    /// `rlgl[:schedule]`, `pi`, `gs`, `gmres[:m]`, `gso[:schedule]`.
    pub fn parse(s: &str, default_schedule: &str, default_m: usize) -> Result<Self, CliError> {
        let (head, rest) = s.split_once(':').map_or((s, None), |(a, b)| (a, Some(b)));
        Ok(match head {
            "rlgl" => Self::Rlgl(rest.unwrap_or(default_schedule).to_string()),
            "pi" | "power" => Self::Power,
            "gs" => Self::GaussSeidel,
            "gmres" => Self::Gmres(match rest {
                Some(m) => m.parse().map_err(|_| CliError::Config(format!("bad GMRES dimension in '{s}'")))?,
                None => default_m,
            }),
            "gso" => Self::Gso(GsoSchedule::parse(rest.unwrap_or("greedy-max"))?),
            _ => return Err(CliError::Config(format!("unknown method '{s}'"))),
        })
    }

    pub fn label(&self) -> String {
        match self {
            Self::Rlgl(s) => format!("rlgl:{s}"),
            Self::Power => "pi".into(),
            Self::GaussSeidel => "gs".into(),
            Self::Gmres(m) => format!("gmres:{m}"),
            Self::Gso(s) => format!("gso:{}", s.label()),
        }
    }

    /// What the trace's residual column measures for this method.
    pub fn residual_kind(&self) -> &'static str {
        match self {
            Self::Rlgl(_) => "cash_l1",
            Self::Power | Self::GaussSeidel => "step_diff_l1",
            Self::Gmres(_) => "lsq_residual_rel2",
            Self::Gso(_) => "residual_l1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    NoConvergence,
    Degenerate,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Self::Converged => 0,
            Self::NoConvergence => 2,
            Self::Degenerate => 3,
        }
    }
}

pub struct MethodRun {
    pub pi: Option<Vec<f64>>,
    pub trace: RunTrace,
    pub status: Status,
}

pub struct RunParams {
    pub eps: f64,
    pub max_steps: u64,
    pub seed: u64,
    pub theta_r: Option<f64>,
    pub stride: Option<u64>,
    pub pihat: bool,
    pub oracle: Option<Vec<f64>>,
    pub m0: Option<Distribution>,
}

fn schedule(spec: &str, params: &RunParams, n: usize) -> Result<Schedule, CliError> {
    if let Some(path) = spec.strip_prefix("blocks:") {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
        let seq = parse_block_sequence(&text)?;
        if let Some(&bad) = seq.iter().flatten().find(|&&i| i >= n) {
            return Err(CliError::Config(format!("block file names node {bad}, chain has {n}")));
        }
        return Ok(Schedule::fixed_blocks(seq)?);
    }
    let mut s = Schedule::parse(spec)?;
    // --theta-r only fills in a bare `theta`
    if let (true, Some(r)) = (spec == "theta", params.theta_r) {
        s = Schedule::new(ScheduleKind::Theta { r, period: None }, 0)?;
    }
    // seeded kinds take the global seed unless the spec carries one
    if !spec.contains(':') && matches!(s.kind(), ScheduleKind::Rand | ScheduleKind::Pc) {
        s = Schedule::new(s.kind().clone(), params.seed)?;
    }
    Ok(s)
}

fn solver_result(res: Result<rlgl_core::solvers::SolveOutcome, SolverError>) -> Result<MethodRun, CliError> {
    match res {
        Ok(out) => Ok(MethodRun { pi: Some(out.pi.into_vec()), trace: out.trace, status: Status::Converged }),
        Err(SolverError::NoConvergence { trace, .. }) => Ok(MethodRun { pi: None, trace, status: Status::NoConvergence }),
        Err(e) => Err(e.into()),
    }
}

pub fn execute(method: &Method, problem: &Problem, params: &RunParams) -> Result<MethodRun, CliError> {
    let n = problem.n();
    let chain = problem.chain.as_ref();
    let m0 = params.m0.clone().unwrap_or_else(|| Distribution::uniform(n));
    match method {
        Method::Rlgl(spec) => {
            let mut sched = schedule(spec, params, n)?;
            let criterion = if params.pihat { Criterion::PiHat(params.eps) } else { Criterion::Cash(params.eps) };
            let stop = StopRule { criterion, max_steps: params.max_steps, stride: params.stride };
            match run_with_oracle(chain, &mut sched, &m0, stop, params.oracle.as_deref()) {
                Ok(out) => Ok(MethodRun { pi: Some(out.pi_hat), trace: out.trace, status: Status::Converged }),
                Err(EngineError::NoConvergence { partial, .. }) => {
                    Ok(MethodRun { pi: Some(partial.pi_hat), trace: partial.trace, status: Status::NoConvergence })
                }
                Err(EngineError::DegenerateHistory { .. }) => {
                    Ok(MethodRun { pi: None, trace: RunTrace::default(), status: Status::Degenerate })
                }
                Err(e) => Err(e.into()),
            }
        }
        Method::Power => solver_result(power_iteration(chain, &m0, params.eps, params.max_steps)),
        Method::GaussSeidel => solver_result(gauss_seidel(&problem.column_view(), &m0, params.eps, params.max_steps)),
        Method::Gmres(m) => {
            let restarts = (params.max_steps / *m as u64).max(1);
            match gmres_restarted(chain, m0.as_slice(), *m, params.eps, restarts) {
                Ok(out) => Ok(MethodRun { pi: Some(out.pi.into_vec()), trace: out.trace, status: Status::Converged }),
                Err(SolverError::NoConvergence { trace, .. }) => Ok(MethodRun { pi: None, trace, status: Status::NoConvergence }),
                Err(e) => Err(e.into()),
            }
        }
        Method::Gso(sched) => {
            let g = problem
                .google
                .as_ref()
                .ok_or_else(|| CliError::Config("gso needs PageRank mode (--damping)".into()))?;
            let sched = *sched;
            solver_result(gso_pagerank(&g.patched_links(), g.damping(), g.restart(), sched, params.eps, params.max_steps))
        }
    }
}
