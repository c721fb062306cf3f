//! Optimal block scheduling for the three-block mean-field SBM.
//!
//! The state is the per-node cash of each block. A green light moves whole
//! blocks, so the dynamics are three-dimensional and linear; a value function
//! on the `(z1, z2)` grid gives the cheapest way to shrink the cash below
//! `eps`.

use thiserror::Error;

use crate::markov::Chain;
use crate::models::{MeanFieldSbm, ModelError};
use crate::schedule::{GreenLight, Pick, ScheduleError, Selection};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cash is identically zero")]
    ZeroCash,
    #[error("z2 = {0} outside [-2, 2]")]
    OutOfRange(f64),
    #[error("no convergence after {steps} steps (cash l1 {cash_l1:.3e})")]
    NoConvergence { steps: usize, cash_l1: f64, trajectory: Box<Trajectory> },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Green-light sets over blocks 1, 2, 3 (stored 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
}

impl Action {
    pub const ALL: [Action; 7] = [Action::A1, Action::A2, Action::A3, Action::A4, Action::A5, Action::A6, Action::A7];

    pub fn blocks(self) -> &'static [usize] {
        match self {
            Action::A1 => &[0],
            Action::A2 => &[1],
            Action::A3 => &[2],
            Action::A4 => &[0, 1],
            Action::A5 => &[1, 2],
            Action::A6 => &[0, 2],
            Action::A7 => &[0, 1, 2],
        }
    }

    /// 1-based action number.
    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn from_number(k: usize) -> Option<Self> {
        Self::ALL.get(k.checked_sub(1)?).copied()
    }

    pub fn name(self) -> String {
        format!("a{}", self.number())
    }
}

/// Model parameters for the three-block mean-field SBM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeBlock {
    pub sizes: [usize; 3],
    pub p: f64,
    pub q: f64,
}

impl ThreeBlock {
    pub fn new(sizes: [usize; 3], p: f64, q: f64) -> Result<Self, MdpError> {
        if sizes.contains(&0) {
            return Err(MdpError::InvalidParams("block sizes must be positive".into()));
        }
        if !(sizes[0] >= sizes[1] && sizes[1] >= sizes[2]) {
            return Err(MdpError::InvalidParams("block sizes must be non-increasing".into()));
        }
        if !(q > 0.0 && q < p && p <= 1.0) {
            return Err(MdpError::InvalidParams(format!("need 0 < q < p <= 1 (got p={p}, q={q})")));
        }
        Ok(Self { sizes, p, q })
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// `N_i (p - q) + N q`.
    pub fn denominator(&self, i: usize) -> f64 {
        self.sizes[i] as f64 * (self.p - self.q) + self.n() as f64 * self.q
    }

    pub fn chain(&self) -> Result<MeanFieldSbm, MdpError> {
        Ok(MeanFieldSbm::new(&self.sizes, self.p, self.q)?)
    }

    /// Expected number of edge operations for an action.
    pub fn action_cost(&self, a: Action) -> f64 {
        a.blocks().iter().map(|&i| self.sizes[i] as f64 * self.denominator(i)).sum()
    }
}

/// Per-node cash of each block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCash {
    pub c: [f64; 3],
}

impl BlockCash {
    pub fn l1(&self, m: &ThreeBlock) -> f64 {
        (0..3).map(|i| m.sizes[i] as f64 * self.c[i].abs()).sum()
    }

    pub fn total(&self, m: &ThreeBlock) -> f64 {
        (0..3).map(|i| m.sizes[i] as f64 * self.c[i]).sum()
    }


    /// Expands to a per-node cash vector in block order.
    pub fn expand(&self, m: &ThreeBlock) -> Vec<f64> {
        (0..3).flat_map(|i| std::iter::repeat_n(self.c[i], m.sizes[i])).collect()
    }
}

/// Applies one block green light. Green blocks keep `c_i N_i p / D_i`,
/// every block `k` receives `c_i N_i q / D_i` from each green block `i != k`.
impl std::ops::Neg for BlockCash {
    type Output = Self;

    fn neg(self) -> Self {
        Self { c: [-self.c[0], -self.c[1], -self.c[2]] }
    }
}

pub fn block_cash_update(c: &BlockCash, action: Action, m: &ThreeBlock) -> BlockCash {
    let green = action.blocks();
    let mut out = [0.0; 3];
    for k in 0..3 {
        if !green.contains(&k) {
            out[k] = c.c[k];
        }
    }
    for &i in green {
        let moved = c.c[i] * m.sizes[i] as f64 / m.denominator(i);
        for (k, o) in out.iter_mut().enumerate() {
            *o += moved * if k == i { m.p } else { m.q };
        }
    }
    BlockCash { c: out }
}

/// One cash-iteration initialization from the uniform distribution,
/// aggregated per block: `c_0 = (1/N) 1 (P - I)`.
pub fn meanfield_init(m: &ThreeBlock) -> Result<BlockCash, MdpError> {
    let chain = m.chain()?;
    let n = m.n();
    let uniform = vec![1.0 / n as f64; n];
    let next = chain.left_mul(&uniform);
    let mut c = [0.0; 3];
    for (b, slot) in c.iter_mut().enumerate() {
        let r = chain.block_range(b);
        let len = r.len() as f64;
        *slot = r.map(|i| next[i] - uniform[i]).sum::<f64>() / len;
    }
    Ok(BlockCash { c })
}

/// `(z1, z2)` with the sign flip applied when `c_1 < 0`.
pub fn encode_state(c: &BlockCash, m: &ThreeBlock, eps: f64) -> Result<(f64, f64), MdpError> {
    let norm = c.l1(m);
    if norm == 0.0 {
        return Err(MdpError::ZeroCash);
    }
    let c = if c.c[0] < 0.0 { -*c } else { *c };
    let y = |i: usize| 2.0 * m.sizes[i] as f64 * c.c[i] / norm;
    Ok(((norm / eps).log10(), (y(1) - y(2)).clamp(-2.0, 2.0)))
}

/// `(y2, y3)` for a given `z2`.
pub fn decode_state(z2: f64) -> Result<(f64, f64), MdpError> {
    if !(-2.0..=2.0).contains(&z2) {
        return Err(MdpError::OutOfRange(z2));
    }
    Ok(if z2 >= 1.0 {
        (z2 - 1.0, -1.0)
    } else if z2 >= -1.0 {
        ((z2 - 1.0) / 2.0, -(z2 + 1.0) / 2.0)
    } else {
        (-1.0, -z2 - 1.0)
    })
}

/// Block cash with the given `l1` norm whose encoding has this `z2`.
pub fn state_from_z2(z2: f64, norm: f64, m: &ThreeBlock) -> Result<BlockCash, MdpError> {
    let (y2, y3) = decode_state(z2)?;
    let y = [-y2 - y3, y2, y3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        c[i] = y[i] * norm / (2.0 * m.sizes[i] as f64);
    }
    Ok(BlockCash { c })
}

/// Value function and optimal action on a `(z1, z2)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGrid {
    pub model: ThreeBlock,
    pub eps: f64,
    pub z1_max: f64,
    pub n_z1: usize,
    pub n_z2: usize,
    /// Row-major by `z1`: `values[i * n_z2 + j]`.
    pub values: Vec<f64>,
    pub actions: Vec<Option<Action>>,
    /// Number of (cell, action) pairs dropped because the action does not
    /// shrink the cash.
    pub excluded: usize,
}

impl PolicyGrid {
    pub fn z1(&self, i: usize) -> f64 {
        self.z1_max * i as f64 / (self.n_z1 - 1) as f64
    }

    pub fn z2(&self, j: usize) -> f64 {
        -2.0 + 4.0 * j as f64 / (self.n_z2 - 1) as f64
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_z2 + j]
    }

    pub fn action(&self, i: usize, j: usize) -> Option<Action> {
        self.actions[i * self.n_z2 + j]
    }

    /// Action at the nearest grid cell; `z1` is clamped to the grid.
    pub fn lookup(&self, z1: f64, z2: f64) -> Option<Action> {
        let h1 = self.z1_max / (self.n_z1 - 1) as f64;
        let i = ((z1 / h1).round().max(0.0) as usize).min(self.n_z1 - 1);
        let h2 = 4.0 / (self.n_z2 - 1) as f64;
        let j = (((z2 + 2.0) / h2).round().max(0.0) as usize).min(self.n_z2 - 1);
        self.action(i, j)
    }

    /// Share of cells (with an action) whose action is one of `set`.
    pub fn action_share(&self, set: &[Action]) -> f64 {
        let with: Vec<Action> = self.actions.iter().flatten().copied().collect();
        with.iter().filter(|a| set.contains(a)).count() as f64 / with.len().max(1) as f64
    }

    /// `z1,z2,action,V` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z1,z2,action,V\n");
        for i in 0..self.n_z1 {
            for j in 0..self.n_z2 {
                let a = self.action(i, j).map(|a| a.name()).unwrap_or_default();
                out.push_str(&format!("{:.6},{:.6},{},{}\n", self.z1(i), self.z2(j), a, self.value(i, j)));
            }
        }
        out
    }
}

/// Successor of one grid column under one action: change in `z1` and new `z2`.
#[derive(Debug, Clone, Copy)]
struct Successor {
    dz1: f64,
    z2: f64,
}

const CONTRACTION_TOL: f64 = 1e-12;
const ROW_ITERATIONS: usize = 1000;
const TIE_TOL: f64 = 1e-12;

/// Backward induction over `z1` with bilinear interpolation of successors.
///
/// Every contracting action lowers `z1`, so row `i` only depends on rows
/// below it plus itself when the drop is smaller than one grid step; that
/// self-dependence is resolved by a monotone fixed-point iteration.
pub fn solve_policy(m: &ThreeBlock, c0: &BlockCash, eps: f64, n_z1: usize, n_z2: usize) -> Result<PolicyGrid, MdpError> {
    if n_z1 < 2 || n_z2 < 2 {
        return Err(MdpError::InvalidParams("grid needs at least 2 points per axis".into()));
    }
    if !(eps > 0.0) {
        return Err(MdpError::InvalidParams("eps must be positive".into()));
    }
    let norm0 = c0.l1(m);
    if norm0 == 0.0 {
        return Err(MdpError::ZeroCash);
    }
    let z1_max = (norm0 / eps).log10();
    if !(z1_max > 0.0) {
        return Err(MdpError::InvalidParams("initial cash already below eps".into()));
    }
    let h1 = z1_max / (n_z1 - 1) as f64;
    let h2 = 4.0 / (n_z2 - 1) as f64;
    let kappa: Vec<f64> = Action::ALL.iter().map(|&a| m.action_cost(a)).collect();

    let mut excluded = 0;
    let mut succ: Vec<[Option<Successor>; 7]> = Vec::with_capacity(n_z2);
    for j in 0..n_z2 {
        let z2 = -2.0 + h2 * j as f64;
        let c = state_from_z2(z2, 1.0, m)?;
        let mut row = [None; 7];
        for (k, &a) in Action::ALL.iter().enumerate() {
            let next = block_cash_update(&c, a, m);
            let ratio = next.l1(m) / c.l1(m);
            if ratio >= 1.0 - CONTRACTION_TOL {
                excluded += 1;
                continue;
            }
            row[k] = Some(if ratio == 0.0 {
                Successor { dz1: f64::NEG_INFINITY, z2: 0.0 }
            } else {
                Successor { dz1: ratio.log10(), z2: encode_state(&next, m, 1.0)?.1 }
            });
        }
        succ.push(row);
    }

    let mut values = vec![0.0; n_z1 * n_z2];
    let mut actions = vec![None; n_z1 * n_z2];
    let interp_row = |row: &[f64], z2: f64| -> f64 {
        let s = ((z2 + 2.0) / h2).clamp(0.0, (n_z2 - 1) as f64);
        let j0 = (s.floor() as usize).min(n_z2 - 2);
        let f = s - j0 as f64;
        row[j0] * (1.0 - f) + row[j0 + 1] * f
    };
    let choose = |costs: &[(usize, f64)]| -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for &(k, v) in costs {
            best = match best {
                None => Some((k, v)),
                Some((bk, bv)) => {
                    let tie = (v - bv).abs() <= TIE_TOL * bv.abs().max(1.0);
                    if (!tie && v < bv) || (tie && (kappa[k], k) < (kappa[bk], bk)) {
                        Some((k, v))
                    } else {
                        Some((bk, bv))
                    }
                }
            };
        }
        best
    };

    // Row 0 is the target band: V = 0, action = cheapest contracting one.
    for j in 0..n_z2 {
        let costs: Vec<(usize, f64)> = (0..7).filter(|&k| succ[j][k].is_some()).map(|k| (k, kappa[k])).collect();
        actions[j] = choose(&costs).map(|(k, _)| Action::ALL[k]);
    }

    for i in 1..n_z1 {
        let z1 = h1 * i as f64;
        let (below, rest) = values.split_at_mut(i * n_z2);
        let prev = &below[(i - 1) * n_z2..];
        let lower = &below[..];
        let current = &mut rest[..n_z2];
        current.copy_from_slice(prev);
        let mut row_actions = vec![None; n_z2];
        for _ in 0..ROW_ITERATIONS {
            let snapshot = current.to_vec();
            let mut change = 0.0f64;
            for j in 0..n_z2 {
                let mut costs = Vec::with_capacity(7);
                for k in 0..7 {
                    let Some(s) = succ[j][k] else { continue };
                    let target = z1 + s.dz1;
                    let v = if target <= 0.0 {
                        0.0
                    } else {
                        let r = target / h1;
                        let lo = (r.floor() as usize).min(i - 1);
                        let f = r - lo as f64;
                        let v_lo = interp_row(&lower[lo * n_z2..(lo + 1) * n_z2], s.z2);
                        let v_hi = if lo + 1 == i {
                            interp_row(&snapshot, s.z2)
                        } else {
                            interp_row(&lower[(lo + 1) * n_z2..(lo + 2) * n_z2], s.z2)
                        };
                        v_lo * (1.0 - f) + v_hi * f
                    };
                    costs.push((k, kappa[k] + v));
                }
                if let Some((k, v)) = choose(&costs) {
                    change = change.max((v - current[j]).abs());
                    current[j] = v;
                    row_actions[j] = Some(Action::ALL[k]);
                }
            }
            let scale = current.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            if change <= 1e-13 * scale {
                break;
            }
        }
        actions[i * n_z2..(i + 1) * n_z2].copy_from_slice(&row_actions);
    }
    Ok(PolicyGrid { model: *m, eps, z1_max, n_z1, n_z2, values, actions, excluded })
}

/// Where the next action comes from during a simulation.
#[derive(Debug, Clone, Copy)]
pub enum ActionSource<'a> {
    Policy(&'a PolicyGrid),
    /// Repeated cyclically.
    Fixed(&'a [Action]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub actions: Vec<Action>,
    /// Running total of action costs after each step.
    pub cum_kappa: Vec<f64>,
    /// `l1` norm before each step and after the last one.
    pub norms: Vec<f64>,
    pub states: Vec<BlockCash>,
    pub converged: bool,
}

impl Trajectory {
    pub fn total_kappa(&self) -> f64 {
        self.cum_kappa.last().copied().unwrap_or(0.0)
    }

    /// `step,action,z1,z2,cash_l1,cum_kappa` rows.
    pub fn to_csv(&self, m: &ThreeBlock, eps: f64) -> String {
        let mut out = String::from("step,action,z1,z2,cash_l1,cum_kappa\n");
        for (t, a) in self.actions.iter().enumerate() {
            let (z1, z2) = encode_state(&self.states[t], m, eps).unwrap_or((f64::NAN, f64::NAN));
            out.push_str(&format!("{},{},{:.6},{:.6},{:e},{}\n", t, a.name(), z1, z2, self.norms[t], self.cum_kappa[t]));
        }
        out
    }
}

/// Applies actions until the cash falls to `eps` or below.
pub fn simulate_policy(
    m: &ThreeBlock,
    c0: &BlockCash,
    source: ActionSource,
    eps: f64,
    max_steps: usize,
) -> Result<Trajectory, MdpError> {
    let mut c = *c0;
    let mut traj = Trajectory { actions: vec![], cum_kappa: vec![], norms: vec![c.l1(m)], states: vec![c], converged: false };
    let mut total = 0.0;
    for t in 0..max_steps {
        let norm = c.l1(m);
        if norm <= eps {
            traj.converged = true;
            return Ok(traj);
        }
        let a = match source {
            ActionSource::Policy(grid) => {
                let (z1, z2) = encode_state(&c, m, eps)?;
                grid.lookup(z1, z2).unwrap_or(Action::A7)
            }
            ActionSource::Fixed(seq) => {
                if seq.is_empty() {
                    return Err(MdpError::InvalidParams("empty action sequence".into()));
                }
                seq[t % seq.len()]
            }
        };
        c = block_cash_update(&c, a, m);
        total += m.action_cost(a);
        traj.actions.push(a);
        traj.cum_kappa.push(total);
        traj.norms.push(c.l1(m));
        traj.states.push(c);
    }
    if c.l1(m) <= eps {
        traj.converged = true;
        return Ok(traj);
    }
    Err(MdpError::NoConvergence { steps: max_steps, cash_l1: c.l1(m), trajectory: Box::new(traj) })
}

/// Fraction of steps from `burn_in` on that lie inside an occurrence of `motif`.
pub fn motif_coverage(actions: &[Action], motif: &[Action], burn_in: usize) -> f64 {
    let n = actions.len();
    if burn_in >= n || motif.is_empty() {
        return 0.0;
    }
    let mut covered = vec![false; n];
    for s in 0..n.saturating_sub(motif.len() - 1) {
        if actions[s..s + motif.len()] == *motif {
            covered[s..s + motif.len()].iter_mut().for_each(|c| *c = true);
        }
    }
    covered[burn_in..].iter().filter(|&&c| c).count() as f64 / (n - burn_in) as f64
}

/// Limit of the absolute cash when only block `i` ever moves: block `i`
/// drains and each other block `j` keeps `N_j c_j + N_j / (N - N_i) N_i c_i`.
pub fn single_block_limit(c: &BlockCash, i: usize, m: &ThreeBlock) -> f64 {
    let n = m.n() as f64;
    let ni = m.sizes[i] as f64;
    (0..3)
        .filter(|&j| j != i)
        .map(|j| {
            let nj = m.sizes[j] as f64;
            (nj * c.c[j] + nj / (n - ni) * c.c[i] * ni).abs()
        })
        .sum()
}

/// Engine schedule that reads the block cash of a mean-field chain and
/// follows a solved policy grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySchedule {
    pub grid: PolicyGrid,
    blocks: [std::ops::Range<usize>; 3],
}

impl PolicySchedule {
    pub fn new(grid: PolicyGrid) -> Self {
        let s = grid.model.sizes;
        let blocks = [0..s[0], s[0]..s[0] + s[1], s[0] + s[1]..s[0] + s[1] + s[2]];
        Self { grid, blocks }
    }

    pub fn select(&mut self, _step: u64, cash: &[f64], _chain: &dyn Chain) -> Result<Pick, ScheduleError> {
        let n = self.grid.model.n();
        if cash.len() != n {
            return Err(ScheduleError::InvalidParameter(format!("policy expects {n} nodes, got {}", cash.len())));
        }
        let mut c = [0.0; 3];
        for (b, r) in self.blocks.iter().enumerate() {
            c[b] = cash[r.clone()].iter().sum::<f64>() / r.len() as f64;
        }
        let state = BlockCash { c };
        let (z1, z2) = encode_state(&state, &self.grid.model, self.grid.eps).map_err(|_| ScheduleError::AllCashZero)?;
        let a = self.grid.lookup(z1, z2).unwrap_or(Action::A7);
        let nodes = a.blocks().iter().flat_map(|&b| self.blocks[b].clone()).collect();
        Ok(Pick { selection: Selection::Set(nodes), scanned: n as u64 })
    }
}

impl GreenLight for PolicySchedule {
    fn select(&mut self, step: u64, cash: &[f64], chain: &dyn Chain) -> Result<Pick, ScheduleError> {
        PolicySchedule::select(self, step, cash, chain)
    }

    fn label(&self) -> String {
        "policy".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard() -> ThreeBlock {
        ThreeBlock::new([50, 20, 10], 0.1, 0.01).unwrap()
    }

    #[test]
    fn action_costs() {
        let m = standard();
        assert!((m.action_cost(Action::A3) - 17.0).abs() < 1e-12);
        let sum: f64 = [Action::A1, Action::A2, Action::A3].iter().map(|&a| m.action_cost(a)).sum();
        assert!((m.action_cost(Action::A7) - sum).abs() < 1e-9);
    }

    #[test]
    fn single_block_factor() {
        let m = standard();
        let c = BlockCash { c: [0.01, -0.02, -0.03] };
        let next = block_cash_update(&c, Action::A3, &m);
        assert!((next.c[2] - c.c[2] * 10.0 * 0.1 / 1.7).abs() < 1e-16);
        assert!((next.total(&m) - c.total(&m)).abs() < 1e-15);
        assert_eq!(block_cash_update(&BlockCash { c: [0.0; 3] }, Action::A7, &m).c, [0.0; 3]);
    }

    #[test]
    fn symmetric_pair_stays_symmetric() {
        let m = ThreeBlock::new([40, 20, 20], 0.1, 0.01).unwrap();
        let c = BlockCash { c: [0.01, -0.01, -0.01] };
        let next = block_cash_update(&c, Action::A5, &m);
        assert!((next.c[1] - next.c[2]).abs() < 1e-18);
    }

    #[test]
    fn decode_cases() {
        assert_eq!(decode_state(1.5).unwrap(), (0.5, -1.0));
        assert_eq!(decode_state(0.0).unwrap(), (-0.5, -0.5));
        assert_eq!(decode_state(-1.5).unwrap(), (-1.0, 0.5));
        assert!(decode_state(2.5).is_err());
    }

    #[test]
    fn encode_roundtrip() {
        let m = standard();
        for k in 0..=1000 {
            let z2 = -2.0 + 4.0 * k as f64 / 1000.0;
            let c = state_from_z2(z2, 0.3, &m).unwrap();
            assert!(c.c[0] >= 0.0);
            let (z1, back) = encode_state(&c, &m, 0.3).unwrap();
            assert!(z1.abs() < 1e-12);
            assert!((back - z2).abs() < 1e-12);
        }
        assert_eq!(encode_state(&BlockCash { c: [0.0; 3] }, &m, 1.0), Err(MdpError::ZeroCash));
    }

    #[test]
    fn init_signs() {
        let m = standard();
        let c0 = meanfield_init(&m).unwrap();
        assert!(c0.total(&m).abs() < 1e-15);
        assert!(c0.c[0] > 0.0 && c0.c[2] < 0.0);
        let even = meanfield_init(&ThreeBlock::new([7, 7, 7], 0.2, 0.05).unwrap()).unwrap();
        assert!(even.c.iter().all(|c| c.abs() < 1e-16));
    }

    #[test]
    fn small_policy_properties() {
        let m = standard();
        let c0 = meanfield_init(&m).unwrap();
        let grid = solve_policy(&m, &c0, 1e-6, 120, 21).unwrap();
        let cheapest = Action::ALL.iter().map(|&a| m.action_cost(a)).fold(f64::INFINITY, f64::min);
        for j in 0..grid.n_z2 {
            assert_eq!(grid.value(0, j), 0.0);
            for i in 1..grid.n_z1 {
                assert!(grid.value(i, j) + 1e-9 >= grid.value(i - 1, j));
                assert!(grid.value(i, j) >= cheapest - 1e-9);
            }
        }
        let traj = simulate_policy(&m, &c0, ActionSource::Policy(&grid), 1e-6, 10_000).unwrap();
        assert!(traj.converged);
    }

    #[test]
    fn motif_counting() {
        use Action::*;
        let seq = [A1, A3, A3, A3, A5, A3, A3, A3, A5, A2];
        let cov = motif_coverage(&seq, &[A3, A3, A3, A5], 1);
        assert!((cov - 8.0 / 9.0).abs() < 1e-15);
    }
}
