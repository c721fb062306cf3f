//! Green-light schedules: who pushes cash at each step.
//!
//! Steps are numbered from 0 (the first push after initialization), so
//! round-robin visits node 0 first.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::markov::Chain;
use crate::mdp::PolicySchedule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("all cash is zero; no node can be selected")]
    AllCashZero,
    #[error("schedule needs at least one node")]
    Empty,
    #[error("block sequence must be non-empty")]
    EmptySequence,
    #[error("node {index} out of range for {n} nodes")]
    InvalidNode { index: usize, n: usize },
    #[error("invalid schedule parameter: {0}")]
    InvalidParameter(String),
}

/// The set of nodes allowed to push at one step.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    Set(Vec<usize>),
    /// No cash moves; the step counter still advances.
    Skip,
}

/// One schedule decision plus the number of entries inspected to make it.
#[derive(Debug, Clone, PartialEq)]
pub struct Pick {
    pub selection: Selection,
    pub scanned: u64,
}

impl Pick {
    fn set(nodes: Vec<usize>, scanned: u64) -> Self {
        Self { selection: Selection::Set(nodes), scanned }
    }

    fn one(i: usize, scanned: u64) -> Self {
        Self::set(vec![i], scanned)
    }
}

/// A green-light set generator driven by the engine.
pub trait GreenLight {
    fn select(&mut self, step: u64, cash: &[f64], chain: &dyn Chain) -> Result<Pick, ScheduleError>;

    /// Random schedules restart with a new seed; deterministic ones rotate.
    fn is_stochastic(&self) -> bool {
        false
    }

    /// Alters the schedule slightly after a degenerate run.
    fn perturb(&mut self) {}

    /// Returns to the initial cursor and RNG state (keeping any perturbation).
    fn reset(&mut self) {}

    fn label(&self) -> String;
}

/// Round-robin node for step `t`.
pub fn next_rr(t: u64, n: usize) -> usize {
    (t % n as u64) as usize
}

/// Uniform random node.
pub fn next_rand<R: Rng>(rng: &mut R, n: usize) -> usize {
    rng.gen_range(0..n)
}

/// Index of the largest absolute cash, scanning from `start` cyclically.
/// Ties go to the first index met.
pub fn next_maxc(cash: &[f64], start: usize) -> Result<usize, ScheduleError> {
    let n = cash.len();
    let mut best = None;
    let mut best_val = 0.0;
    for k in 0..n {
        let i = (start + k) % n;
        let v = cash[i].abs();
        if v > best_val {
            best_val = v;
            best = Some(i);
        }
    }
    best.ok_or(ScheduleError::AllCashZero)
}

/// Samples a node with probability proportional to its absolute cash.
pub fn next_pc<R: Rng>(rng: &mut R, cash: &[f64]) -> Result<usize, ScheduleError> {
    let total: f64 = cash.iter().map(|c| c.abs()).sum();
    if !(total > 0.0) {
        return Err(ScheduleError::AllCashZero);
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, c) in cash.iter().enumerate() {
        let w = c.abs();
        if w == 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return Ok(i);
        }
    }
    Ok(last)
}

/// Change of the absolute cash if node `i` alone pushed, without mutating.
/// Returns the change and the number of entries inspected.
pub fn push_l1_delta(cash: &[f64], i: usize, chain: &dyn Chain) -> (f64, u64) {
    let x = cash[i];
    let mut delta = -x.abs();
    let mut scanned = 0u64;
    chain.for_each_entry(i, &mut |j, p| {
        scanned += 1;
        let before = if j == i { 0.0 } else { cash[j] };
        delta += (before + x * p).abs() - before.abs();
    });
    (delta, scanned)
}

/// Singleton minimizing the next absolute cash, ties by scan order from `start`.
pub fn next_greedy(cash: &[f64], chain: &dyn Chain, start: usize) -> Result<(usize, u64), ScheduleError> {
    let n = cash.len();
    let mut best: Option<(usize, f64)> = None;
    let mut scanned = n as u64;
    for k in 0..n {
        let i = (start + k) % n;
        if cash[i] == 0.0 {
            continue;
        }
        let (d, s) = push_l1_delta(cash, i, chain);
        scanned += s;
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| (i, scanned)).ok_or(ScheduleError::AllCashZero)
}

/// Max-scaled power mean `(sum |c_j|^r / n)^(1/r)`.
pub fn power_mean_threshold(cash: &[f64], r: f64) -> f64 {
    let m = cash.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = cash.iter().map(|c| (c.abs() / m).powf(r)).sum();
    m * (s / cash.len() as f64).powf(1.0 / r)
}

/// Theta decision for a known threshold: candidate `t mod n` or skip.
pub fn next_theta(cash: &[f64], t: u64, threshold: f64) -> Option<usize> {
    let i = next_rr(t, cash.len());
    (cash[i].abs() >= threshold && cash[i] != 0.0).then_some(i)
}

/// Block sequence entry for step `t`.
pub fn next_fixed_blocks(t: u64, sequence: &[Vec<usize>]) -> &[usize] {
    &sequence[(t % sequence.len() as u64) as usize]
}

#[derive(Debug, Clone)]
pub enum ScheduleKind {
    RoundRobin,
    Rand,
    Greedy,
    MaxC,
    Pc,
    Theta { r: f64, period: Option<u64> },
    FixedBlocks(Vec<Vec<usize>>),
    Policy(Box<PolicySchedule>),
    AllNodes,
}

/// Built-in schedules with their cursor and RNG state.
#[derive(Debug, Clone)]
pub struct Schedule {
    kind: ScheduleKind,
    seed: u64,
    rng: ChaCha8Rng,
    offset: usize,
    theta_cache: Option<(u64, f64)>,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, seed: u64) -> Result<Self, ScheduleError> {
        match &kind {
            ScheduleKind::FixedBlocks(seq) if seq.is_empty() => return Err(ScheduleError::EmptySequence),
            ScheduleKind::Theta { r, period } => {
                if !(*r >= 1.0) || !r.is_finite() {
                    return Err(ScheduleError::InvalidParameter(format!("theta exponent {r} must be at least 1")));
                }
                if *period == Some(0) {
                    return Err(ScheduleError::InvalidParameter("theta period must be positive".into()));
                }
            }
            _ => {}
        }
        Ok(Self { kind, seed, rng: ChaCha8Rng::seed_from_u64(seed), offset: 0, theta_cache: None })
    }

    pub fn round_robin() -> Self {
        Self::new(ScheduleKind::RoundRobin, 0).unwrap()
    }

    pub fn random(seed: u64) -> Self {
        Self::new(ScheduleKind::Rand, seed).unwrap()
    }

    pub fn greedy() -> Self {
        Self::new(ScheduleKind::Greedy, 0).unwrap()
    }

    pub fn maxc() -> Self {
        Self::new(ScheduleKind::MaxC, 0).unwrap()
    }

    pub fn pc(seed: u64) -> Self {
        Self::new(ScheduleKind::Pc, seed).unwrap()
    }

    pub fn theta(r: f64) -> Self {
        Self::new(ScheduleKind::Theta { r, period: None }, 0).unwrap()
    }

    pub fn fixed_blocks(sequence: Vec<Vec<usize>>) -> Result<Self, ScheduleError> {
        Self::new(ScheduleKind::FixedBlocks(sequence), 0)
    }

    pub fn all_nodes() -> Self {
        Self::new(ScheduleKind::AllNodes, 0).unwrap()
    }

    pub fn policy(policy: PolicySchedule) -> Self {
        Self::new(ScheduleKind::Policy(Box::new(policy)), 0).unwrap()
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Parses `rr`, `rand:seed`, `greedy`, `maxc`, `pc:seed`, `theta:r[:period]`
    /// or `all`. Block files are resolved by the caller.
    pub fn parse(spec: &str) -> Result<Self, ScheduleError> {
        let mut parts = spec.split(':');
        let head = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let bad = |what: &str| ScheduleError::InvalidParameter(format!("{what} in schedule '{spec}'"));
        let seed_arg = |rest: &[&str]| -> Result<u64, ScheduleError> {
            match rest {
                [] => Ok(0),
                [s] => s.parse().map_err(|_| bad("bad seed")),
                _ => Err(bad("too many fields")),
            }
        };
        let no_args = |rest: &[&str]| if rest.is_empty() { Ok(()) } else { Err(bad("unexpected arguments")) };
        match head {
            "rr" => no_args(&rest).map(|_| Self::round_robin()),
            "greedy" => no_args(&rest).map(|_| Self::greedy()),
            "maxc" => no_args(&rest).map(|_| Self::maxc()),
            "all" => no_args(&rest).map(|_| Self::all_nodes()),
            "rand" => Ok(Self::random(seed_arg(&rest)?)),
            "pc" => Ok(Self::pc(seed_arg(&rest)?)),
            "theta" => {
                let r = match rest.first() {
                    None => 1.0,
                    Some(s) => s.parse().map_err(|_| bad("bad exponent"))?,
                };
                let period = match rest.get(1) {
                    None => None,
                    Some(s) => Some(s.parse().map_err(|_| bad("bad period"))?),
                };
                if rest.len() > 2 {
                    return Err(bad("too many fields"));
                }
                Self::new(ScheduleKind::Theta { r, period }, 0)
            }
            _ => Err(bad("unknown kind")),
        }
    }
}

impl GreenLight for Schedule {
    fn select(&mut self, step: u64, cash: &[f64], chain: &dyn Chain) -> Result<Pick, ScheduleError> {
        let n = cash.len();
        if n == 0 {
            return Err(ScheduleError::Empty);
        }
        let shifted = step + self.offset as u64;
        match &mut self.kind {
            ScheduleKind::RoundRobin => Ok(Pick::one(next_rr(shifted, n), 1)),
            ScheduleKind::Rand => Ok(Pick::one(next_rand(&mut self.rng, n), 1)),
            ScheduleKind::Greedy => {
                let (i, scanned) = next_greedy(cash, chain, self.offset % n)?;
                Ok(Pick::one(i, scanned))
            }
            ScheduleKind::MaxC => Ok(Pick::one(next_maxc(cash, self.offset % n)?, n as u64)),
            ScheduleKind::Pc => Ok(Pick::one(next_pc(&mut self.rng, cash)?, n as u64)),
            ScheduleKind::Theta { r, period } => {
                let period = period.unwrap_or(n as u64);
                let anchor = step / period;
                let mut scanned = 1;
                let threshold = match self.theta_cache {
                    Some((a, th)) if a == anchor => th,
                    _ => {
                        let th = power_mean_threshold(cash, *r);
                        self.theta_cache = Some((anchor, th));
                        scanned += n as u64;
                        th
                    }
                };
                Ok(match next_theta(cash, shifted, threshold) {
                    Some(i) => Pick::one(i, scanned),
                    None => Pick { selection: Selection::Skip, scanned },
                })
            }
            ScheduleKind::FixedBlocks(seq) => {
                let set = next_fixed_blocks(shifted, seq);
                if let Some(&index) = set.iter().find(|&&i| i >= n) {
                    return Err(ScheduleError::InvalidNode { index, n });
                }
                Ok(Pick::set(set.to_vec(), 0))
            }
            ScheduleKind::Policy(policy) => policy.select(step, cash, chain),
            ScheduleKind::AllNodes => Ok(Pick::set((0..n).collect(), 0)),
        }
    }

    fn is_stochastic(&self) -> bool {
        matches!(self.kind, ScheduleKind::Rand | ScheduleKind::Pc)
    }

    fn perturb(&mut self) {
        if self.is_stochastic() {
            self.seed = self.seed.wrapping_add(1);
        } else {
            self.offset += 1;
        }
        self.reset();
    }

    fn reset(&mut self) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.theta_cache = None;
    }

    fn label(&self) -> String {
        match &self.kind {
            ScheduleKind::RoundRobin => "rr".into(),
            ScheduleKind::Rand => format!("rand:{}", self.seed),
            ScheduleKind::Greedy => "greedy".into(),
            ScheduleKind::MaxC => "maxc".into(),
            ScheduleKind::Pc => format!("pc:{}", self.seed),
            ScheduleKind::Theta { r, period: None } => format!("theta:{r}"),
            ScheduleKind::Theta { r, period: Some(p) } => format!("theta:{r}:{p}"),
            ScheduleKind::FixedBlocks(_) => "blocks".into(),
            ScheduleKind::Policy(_) => "policy".into(),
            ScheduleKind::AllNodes => "all".into(),
        }
    }
}

/// Reads a block sequence: one green-light set per line, node indices
/// separated by whitespace or commas, `#` comments ignored.
pub fn parse_block_sequence(text: &str) -> Result<Vec<Vec<usize>>, ScheduleError> {
    let mut seq = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let set = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<usize>().map_err(|_| ScheduleError::InvalidParameter(format!("bad node '{s}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        seq.push(set);
    }
    if seq.is_empty() {
        return Err(ScheduleError::EmptySequence);
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{build_transition, DanglingPolicy, TransitionMatrix};

    fn ring(n: usize) -> TransitionMatrix {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        build_transition(&edges, n, &DanglingPolicy::Reject).unwrap()
    }

    fn first(p: Pick) -> usize {
        match p.selection {
            Selection::Set(v) => v[0],
            Selection::Skip => panic!("unexpected skip"),
        }
    }

    #[test]
    fn rr_cycles() {
        assert_eq!(next_rr(5, 4), 1);
        assert_eq!((0..4).map(|t| next_rr(t, 4)).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert_eq!(next_rr(17, 1), 0);
    }

    #[test]
    fn rand_is_seeded_and_uniform() {
        let p = ring(10);
        let cash = vec![0.0; 10];
        let draw = |seed| {
            let mut s = Schedule::random(seed);
            (0..50).map(|t| first(s.select(t, &cash, &p).unwrap())).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 10];
        for _ in 0..100_000 {
            counts[next_rand(&mut rng, 10)] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e5 - 0.1).abs() < 0.01);
        }
    }

    #[test]
    fn maxc_ties_and_zero() {
        assert_eq!(next_maxc(&[0.1, -0.5, 0.2], 0), Ok(1));
        assert_eq!(next_maxc(&[0.5, -0.5], 0), Ok(0));
        assert_eq!(next_maxc(&[0.0, 0.0], 0), Err(ScheduleError::AllCashZero));
    }

    #[test]
    fn pc_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert_eq!(next_pc(&mut rng, &[1.0, 0.0, 0.0]), Ok(0));
        let mut zero_hits = 0;
        let mut first = 0;
        for _ in 0..10_000 {
            match next_pc(&mut rng, &[0.5, 0.0, -0.5]).unwrap() {
                0 => first += 1,
                1 => zero_hits += 1,
                _ => {}
            }
        }
        assert_eq!(zero_hits, 0);
        assert!((first as f64 / 1e4 - 0.5).abs() < 0.02);
        assert_eq!(next_pc(&mut rng, &[0.0]), Err(ScheduleError::AllCashZero));
    }

    #[test]
    fn greedy_single_nonzero_and_cancellation() {
        let p = ring(4);
        let (i, _) = next_greedy(&[0.0, 0.0, 0.3, 0.0], &p, 0).unwrap();
        assert_eq!(i, 2);
        // Node 1 pushes into node 2, which holds opposite cash.
        let (i, _) = next_greedy(&[0.1, 0.4, -0.4, -0.1], &p, 0).unwrap();
        assert_eq!(i, 1);
        assert_eq!(next_greedy(&[0.0; 4], &p, 0), Err(ScheduleError::AllCashZero));
    }

    #[test]
    fn theta_thresholds() {
        assert!((power_mean_threshold(&[0.9, 0.1, 0.0, 0.0], 1.0) - 0.25).abs() < 1e-15);
        assert!((power_mean_threshold(&[0.3, -0.3, 0.3], 1.0) - 0.3).abs() < 1e-15);
        let e = 1e-3;
        let c = [1.0, e, e, e];
        let th = power_mean_threshold(&c, 8.0);
        assert!(c.iter().enumerate().all(|(i, v)| (v.abs() >= th) == (i == 0)));
        let p = ring(4);
        let cash = [0.9, 0.1, 0.0, 0.0];
        let mut s = Schedule::theta(1.0);
        let picks: Vec<_> = (0..4).map(|t| s.select(t, &cash, &p).unwrap().selection).collect();
        assert_eq!(picks, vec![Selection::Set(vec![0]), Selection::Skip, Selection::Skip, Selection::Skip]);
    }

    #[test]
    fn fixed_blocks_cycle() {
        let seq = vec![vec![1], vec![0], vec![2], vec![3]];
        assert_eq!(next_fixed_blocks(5, &seq), &[0]);
        assert!(Schedule::fixed_blocks(vec![]).is_err());
    }

    #[test]
    fn perturb_rotates_or_reseeds() {
        let p = ring(3);
        let cash = [0.0; 3];
        let mut rr = Schedule::round_robin();
        rr.perturb();
        assert_eq!(first(rr.select(0, &cash, &p).unwrap()), 1);
        let mut r = Schedule::random(4);
        r.perturb();
        assert_eq!(r.seed(), 5);
    }

    #[test]
    fn parse_specs() {
        assert_eq!(Schedule::parse("rand:9").unwrap().label(), "rand:9");
        assert_eq!(Schedule::parse("theta:2:8").unwrap().label(), "theta:2:8");
        assert_eq!(Schedule::parse("theta").unwrap().label(), "theta:1");
        assert!(Schedule::parse("bogus").is_err());
        assert!(Schedule::parse("rr:1").is_err());
        assert!(Schedule::parse("theta:0.5").is_err());
        let seq = parse_block_sequence("# cycle\n1\n0, 2\n").unwrap();
        assert_eq!(seq, vec![vec![1], vec![0, 2]]);
    }
}
