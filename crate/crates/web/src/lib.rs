//! Browser bindings. Every export returns a JSON string; the pure functions
//! underneath are plain Rust so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rlgl_core::engine::{run, EngineError, SolverState, StopRule};
use rlgl_core::markov::{build_transition, gth_stationary, Chain, DanglingPolicy, Distribution, GoogleMatrix};
use rlgl_core::mdp::{encode_state, meanfield_init, simulate_policy, solve_policy, Action, ActionSource, ThreeBlock};
use rlgl_core::models::{is_strongly_connected, parse_edge_list, two_wheels, EdgeList, LoadOptions};
use rlgl_core::schedule::{GreenLight, Schedule, Selection};
use rlgl_core::solvers::power_iteration;

/// Largest chain for which the exact answer is shown alongside.
const EXACT_LIMIT: usize = 400;

fn graph(text: &str, undirected: bool) -> Result<EdgeList, String> {
    match text.trim() {
        "four-node" => Ok(EdgeList {
            n: 4,
            edges: vec![(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
            undirected: false,
        }),
        "two-wheels" => Ok(two_wheels()),
        t => parse_edge_list(t, LoadOptions { one_based: false, undirected }).map_err(|e| e.to_string()),
    }
}

fn chain(text: &str, undirected: bool, damping: f64) -> Result<Box<dyn Chain>, String> {
    let g = graph(text, undirected)?;
    if g.n == 0 {
        return Err("empty graph".into());
    }
    if damping > 0.0 {
        let google = GoogleMatrix::from_edges(&g.edges, g.n, damping, Distribution::uniform(g.n)).map_err(|e| e.to_string())?;
        return Ok(Box::new(google));
    }
    if !is_strongly_connected(&g) {
        return Err("graph is not strongly connected; set a damping factor for PageRank mode".into());
    }
    Ok(Box::new(build_transition(&g.edges, g.n, &DanglingPolicy::Reject).map_err(|e| e.to_string())?))
}

#[derive(Serialize)]
pub struct Curve {
    /// `(cumulative cost, residual)` pairs.
    pub points: Vec<(f64, f64)>,
    pub converged: bool,
}

#[derive(Serialize)]
pub struct SolveReport {
    pub n: usize,
    pub pi: Vec<f64>,
    pub exact: Option<Vec<f64>>,
    pub rlgl: Curve,
    pub power: Curve,
}

pub fn solve_report(text: &str, undirected: bool, damping: f64, schedule: &str, eps: f64) -> Result<SolveReport, String> {
    let p = chain(text, undirected, damping)?;
    let n = p.len();
    let mut sched = Schedule::parse(schedule).map_err(|e| e.to_string())?;
    let m0 = Distribution::uniform(n);
    let stop = StopRule::cash(eps, 5_000_000);
    let (pi, rlgl) = match run(p.as_ref(), &mut sched, &m0, stop) {
        Ok(out) => (out.pi_hat, Curve { points: out.trace.records.iter().map(|r| (r.cum_cost, r.cash_l1)).collect(), converged: true }),
        Err(EngineError::NoConvergence { partial, .. }) => {
            let points = partial.trace.records.iter().map(|r| (r.cum_cost, r.cash_l1)).collect();
            (partial.pi_hat, Curve { points, converged: false })
        }
        Err(e) => return Err(e.to_string()),
    };
    let power = match power_iteration(p.as_ref(), &m0, eps, 100_000) {
        Ok(out) => Curve { points: out.trace.records.iter().map(|r| (r.cum_cost, r.cash_l1)).collect(), converged: true },
        Err(rlgl_core::solvers::SolverError::NoConvergence { trace, .. }) => {
            Curve { points: trace.records.iter().map(|r| (r.cum_cost, r.cash_l1)).collect(), converged: false }
        }
        Err(e) => return Err(e.to_string()),
    };
    let exact = if n <= EXACT_LIMIT {
        p.to_dense().ok().and_then(|d| gth_stationary(&d).ok()).map(Distribution::into_vec)
    } else {
        None
    };
    Ok(SolveReport { n, pi, exact, rlgl, power })
}

#[derive(Serialize)]
pub struct Frame {
    pub t: u64,
    /// Nodes that pushed to produce this frame (empty for the initial one).
    pub green: Vec<usize>,
    pub cash: Vec<f64>,
    pub history: Vec<f64>,
    pub estimate: Option<Vec<f64>>,
}

/// Starts from node `start`, or from the uniform distribution when it is negative.
pub fn replay_frames(text: &str, undirected: bool, damping: f64, schedule: &str, start: i32, steps: usize) -> Result<Vec<Frame>, String> {
    let p = chain(text, undirected, damping)?;
    let n = p.len();
    let m0 = match usize::try_from(start) {
        Err(_) => Distribution::uniform(n),
        Ok(i) if i < n => Distribution::point(n, i),
        Ok(i) => return Err(format!("start node {i} out of range for {n} nodes")),
    };
    let mut sched = Schedule::parse(schedule).map_err(|e| e.to_string())?;
    let mut st = SolverState::init(p.as_ref(), &m0).map_err(|e| e.to_string())?;
    let frame = |st: &SolverState, green: Vec<usize>| Frame {
        t: st.t,
        green,
        cash: st.cash.clone(),
        history: st.history.clone(),
        estimate: st.estimate().ok(),
    };
    let mut frames = vec![frame(&st, vec![])];
    for _ in 0..steps {
        let pick = sched.select(st.t - 1, &st.cash, p.as_ref()).map_err(|e| e.to_string())?;
        let green = match pick.selection {
            Selection::Set(nodes) => {
                st.step(p.as_ref(), &nodes).map_err(|e| e.to_string())?;
                nodes
            }
            Selection::Skip => {
                st.idle();
                vec![]
            }
        };
        frames.push(frame(&st, green));
    }
    Ok(frames)
}

#[derive(Serialize)]
pub struct MdpReport {
    pub z1_max: f64,
    pub n_z1: usize,
    pub n_z2: usize,
    /// Action number per cell, row-major by z1; 0 where no action contracts.
    pub actions: Vec<u8>,
    /// `(action, z1, z2)` before each step of the optimal trajectory.
    pub trajectory: Vec<(u8, f64, f64)>,
    pub kappa: f64,
    pub kappa_all_nodes: f64,
}

pub fn mdp_report(sizes: [usize; 3], p: f64, q: f64, eps: f64, n_z1: usize, n_z2: usize) -> Result<MdpReport, String> {
    if n_z1 < 2 || n_z2 < 3 || n_z1 * n_z2 > 2_000_000 {
        return Err("grid must be at least 2 x 3 and at most 2e6 cells".into());
    }
    let m = ThreeBlock::new(sizes, p, q).map_err(|e| e.to_string())?;
    let c0 = meanfield_init(&m).map_err(|e| e.to_string())?;
    let grid = solve_policy(&m, &c0, eps, n_z1, n_z2).map_err(|e| e.to_string())?;
    let traj = simulate_policy(&m, &c0, ActionSource::Policy(&grid), eps, 100_000).map_err(|e| e.to_string())?;
    let all = simulate_policy(&m, &c0, ActionSource::Fixed(&[Action::A7]), eps, 100_000).map_err(|e| e.to_string())?;
    Ok(MdpReport {
        z1_max: grid.z1_max,
        n_z1,
        n_z2,
        actions: grid.actions.iter().map(|a| a.map_or(0, |a| a.number() as u8)).collect(),
        trajectory: traj
            .actions
            .iter()
            .zip(&traj.states)
            .map(|(a, c)| {
                let (z1, z2) = encode_state(c, &m, eps).unwrap_or((f64::NAN, f64::NAN));
                (a.number() as u8, z1, z2)
            })
            .collect(),
        kappa: traj.total_kappa(),
        kappa_all_nodes: all.total_kappa(),
    })
}

fn json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Solves with RLGL and power iteration; `damping <= 0` means the raw walk.
#[wasm_bindgen]
pub fn solve(graph: &str, undirected: bool, damping: f64, schedule: &str, eps: f64) -> Result<String, JsError> {
    json(solve_report(graph, undirected, damping, schedule, eps))
}

/// Cash and history after each of the first `steps` steps.
#[wasm_bindgen]
pub fn replay(graph: &str, undirected: bool, damping: f64, schedule: &str, start: i32, steps: usize) -> Result<String, JsError> {
    json(replay_frames(graph, undirected, damping, schedule, start, steps))
}

/// Optimal block policy for the three-block model.
#[wasm_bindgen]
pub fn mdp(n1: usize, n2: usize, n3: usize, p: f64, q: f64, eps: f64, n_z1: usize, n_z2: usize) -> Result<String, JsError> {
    json(mdp_report([n1, n2, n3], p, q, eps, n_z1, n_z2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_solves_to_sevenths() {
        let r = solve_report("four-node", false, 0.0, "rr", 1e-12).unwrap();
        let want = [2.0 / 7.0, 1.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0];
        assert!(r.pi.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-10));
        assert!(r.rlgl.converged && r.power.converged);
        assert_eq!(r.exact.unwrap().len(), 4);
    }

    #[test]
    fn replay_starts_from_the_point_mass() {
        let f = replay_frames("four-node", false, 0.0, "rr", 0, 1).unwrap();
        assert_eq!(f[0].cash, vec![-1.0, 0.5, 0.5, 0.0]);
        assert_eq!(f[1].green, vec![0]);
        assert!(f[1].history.iter().all(|&h| h == 0.0));
        assert!(f[1].estimate.is_none());
    }

    #[test]
    fn edge_text_and_errors() {
        assert!(solve_report("0 1\n2 3\n", true, 0.0, "rr", 1e-10).is_err());
        let r = solve_report("0 1\n1 2\n", false, 0.85, "theta:1", 1e-10).unwrap();
        assert_eq!(r.n, 3);
        assert!(serde_json::to_string(&r).unwrap().contains("\"power\""));
    }

    #[test]
    fn small_mdp() {
        let r = mdp_report([50, 20, 10], 0.1, 0.01, 1e-6, 200, 21).unwrap();
        assert_eq!(r.actions.len(), 200 * 21);
        assert!(r.kappa < r.kappa_all_nodes);
    }
}
