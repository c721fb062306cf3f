use super::{SolveOutcome, SolverError};
use crate::engine::{RunTrace, TraceRecord};
use crate::markov::{Chain, Distribution, SparseRows, TransitionMatrix};
use crate::schedule::{power_mean_threshold, GreenLight, Pick, ScheduleError};

/// Node choice rule for Gauss-Southwell PageRank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GsoSchedule {
    /// Largest residual, ties to the lowest index.
    GreedyMax,
    RoundRobin,
    /// Round-robin candidate pushed only above the power-mean threshold,
    /// refreshed every n steps.
    Theta(f64),
}

impl GsoSchedule {
    pub fn parse(s: &str) -> Result<Self, SolverError> {
        let bad = || SolverError::InvalidParameter(format!("unknown gso schedule '{s}'"));
        match s {
            "greedy-max" | "greedy" | "max" => Ok(Self::GreedyMax),
            "rr" => Ok(Self::RoundRobin),
            "theta" => Ok(Self::Theta(1.0)),
            _ => {
                let r = s.strip_prefix("theta:").ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?;
                if r >= 1.0 {
                    Ok(Self::Theta(r))
                } else {
                    Err(bad())
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::GreedyMax => "greedy-max".into(),
            Self::RoundRobin => "rr".into(),
            Self::Theta(r) => format!("theta:{r}"),
        }
    }
}

/// Residual `C` and estimate `H` of the Gauss-Southwell iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct GsoState {
    pub residual: Vec<f64>,
    pub estimate: Vec<f64>,
    pub t: u64,
    pub cum_cost: f64,
    pub scan_cost: u64,
    pub updates: u64,
    scaled: SparseRows,
    damping: f64,
    residual_l1: f64,
}

impl GsoState {
    /// `C_1 = (1 - c) s`, `H_1 = 0`.
    pub fn init(p: &TransitionMatrix, c: f64, s: &Distribution) -> Result<Self, SolverError> {
        if !(c > 0.0 && c < 1.0) {
            return Err(crate::markov::MarkovError::InvalidDamping(c).into());
        }
        let n = p.n();
        if s.len() != n {
            return Err(SolverError::Dimension { expected: n, got: s.len() });
        }
        let rows = (0..n)
            .map(|i| {
                let (cols, vals) = p.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| (j, c * v)).collect()
            })
            .collect();
        let scaled = SparseRows::from_rows(n, rows)?;
        let residual: Vec<f64> = s.as_slice().iter().map(|&v| (1.0 - c) * v).collect();
        let residual_l1 = residual.iter().map(|v| v.abs()).sum();
        Ok(Self {
            residual,
            estimate: vec![0.0; n],
            t: 1,
            cum_cost: 0.0,
            scan_cost: 0,
            updates: 0,
            scaled,
            damping: c,
            residual_l1,
        })
    }

    pub fn residual_l1(&self) -> f64 {
        self.residual_l1
    }

    pub fn exact_residual_l1(&self) -> f64 {
        self.residual.iter().map(|v| v.abs()).sum()
    }

    /// Moves node `k`'s residual into the estimate and spreads `c p_k` of it.
    pub fn push(&mut self, k: usize) {
        self.t += 1;
        let x = self.residual[k];
        if x == 0.0 {
            return;
        }
        self.estimate[k] += x;
        self.cum_cost += self.scaled.row_len(k) as f64;
        self.updates += 1;
        let mut l1 = self.residual_l1 - x.abs();
        self.residual[k] = 0.0;
        let (cols, vals) = self.scaled.row(k);
        for (&j, &cp) in cols.iter().zip(vals) {
            let old = self.residual[j];
            let new = old + x * cp;
            self.residual[j] = new;
            l1 += new.abs() - old.abs();
        }
        self.residual_l1 = l1.max(0.0);
    }

    /// Largest `|c H P + (1 - c) s - H - C|` component.
    pub fn identity_defect(&self, p: &TransitionMatrix, s: &Distribution) -> f64 {
        let hp = p.left_mul(&self.estimate);
        (0..self.residual.len())
            .map(|j| {
                let rhs = self.damping * hp[j] + (1.0 - self.damping) * s.as_slice()[j] - self.estimate[j];
                (rhs - self.residual[j]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Gauss-Southwell PageRank on `c P + (1 - c) 1 s`.
pub fn gso_pagerank(
    p: &TransitionMatrix,
    c: f64,
    s: &Distribution,
    schedule: GsoSchedule,
    eps: f64,
    max_steps: u64,
) -> Result<SolveOutcome, SolverError> {
    let mut st = GsoState::init(p, c, s)?;
    let n = p.n();
    let mut trace = RunTrace::default();
    let snap = |st: &GsoState| TraceRecord {
        step: st.t,
        updates: st.updates,
        cum_cost: st.cum_cost,
        scan_cost: st.scan_cost,
        cash_l1: st.exact_residual_l1(),
        err_l1: None,
    };
    trace.records.push(snap(&st));
    let mut mark = n as u64;
    let mut theta: Option<(u64, f64)> = None;
    while st.t <= max_steps {
        if st.residual_l1 < 4.0 * eps {
            st.residual_l1 = st.exact_residual_l1();
        }
        if st.residual_l1 < eps {
            trace.records.push(snap(&st));
            let pi = Distribution::normalized(st.estimate.iter().map(|v| v.max(0.0)).collect())?;
            return Ok(SolveOutcome { pi, trace, iterations: st.t });
        }
        let step = st.t - 1;
        let k = match schedule {
            GsoSchedule::GreedyMax => {
                st.scan_cost += n as u64;
                Some(argmax(&st.residual))
            }
            GsoSchedule::RoundRobin => {
                st.scan_cost += 1;
                Some((step % n as u64) as usize)
            }
            GsoSchedule::Theta(r) => {
                st.scan_cost += 1;
                let anchor = step / n as u64;
                let th = match theta {
                    Some((a, th)) if a == anchor => th,
                    _ => {
                        st.scan_cost += n as u64;
                        let th = power_mean_threshold(&st.residual, r);
                        theta = Some((anchor, th));
                        th
                    }
                };
                let k = (step % n as u64) as usize;
                (st.residual[k] != 0.0 && st.residual[k].abs() >= th).then_some(k)
            }
        };
        match k {
            Some(k) => st.push(k),
            None => st.t += 1,
        }
        if st.updates >= mark {
            trace.records.push(snap(&st));
            mark = st.updates + n as u64;
        }
    }
    let residual = st.exact_residual_l1();
    Err(SolverError::NoConvergence { iterations: max_steps, residual, trace })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Cash-iteration schedule on the augmented chain that picks the same node
/// Gauss-Southwell would: the largest cash among nodes `1..=n`.
#[derive(Debug, Clone, Default)]
pub struct GsoMirror;

impl GreenLight for GsoMirror {
    fn select(&mut self, _step: u64, cash: &[f64], _chain: &dyn Chain) -> Result<Pick, ScheduleError> {
        if cash.len() < 2 {
            return Err(ScheduleError::Empty);
        }
        let k = argmax(&cash[1..]) + 1;
        Ok(Pick { selection: crate::schedule::Selection::Set(vec![k]), scanned: cash.len() as u64 - 1 })
    }

    fn label(&self) -> String {
        "gso-mirror".into()
    }
}
