//! Convergence diagnostics: Dobrushin coefficient, the cyclic-schedule
//! Markov test, the random-schedule rate and two-block closed forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::markov::{DenseMatrix, GoogleMatrix, TransitionMatrix, DENSE_LIMIT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no power up to {r_max} of the cycle product has a positive column")]
    NotMarkov { r_max: usize },
    #[error("{n} nodes exceeds the dense limit of {max}")]
    TooLarge { n: usize, max: usize },
}

/// Number of random row pairs inspected above the dense limit.
pub const DOBRUSHIN_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dobrushin {
    pub delta: f64,
    /// True when only sampled pairs were inspected; `delta` is then a lower
    /// estimate of the coefficient.
    pub estimated: bool,
}

fn row_overlap(p: &TransitionMatrix, a: usize, b: usize) -> f64 {
    let (ca, va) = p.row(a);
    let (cb, vb) = p.row(b);
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < ca.len() && j < cb.len() {
        match ca[i].cmp(&cb[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += va[i].min(vb[j]);
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// `1 - min_{i,i'} sum_j min(p_ij, p_i'j)`.
pub fn dobrushin(p: &TransitionMatrix) -> Dobrushin {
    let n = p.n();
    if n < 2 {
        return Dobrushin { delta: 0.0, estimated: false };
    }
    let mut min_overlap = f64::INFINITY;
    if n <= DENSE_LIMIT {
        'outer: for a in 0..n {
            for b in a + 1..n {
                min_overlap = min_overlap.min(row_overlap(p, a, b));
                if min_overlap <= 0.0 {
                    break 'outer;
                }
            }
        }
        return Dobrushin { delta: (1.0 - min_overlap).clamp(0.0, 1.0), estimated: false };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..DOBRUSHIN_SAMPLES {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            min_overlap = min_overlap.min(row_overlap(p, a, b));
            if min_overlap <= 0.0 {
                break;
            }
        }
    }
    Dobrushin { delta: (1.0 - min_overlap).clamp(0.0, 1.0), estimated: true }
}

/// Coefficient of the Google matrix. Every pair of rows shares the restart
/// mass `1 - c`, so it equals `c` times the coefficient of the patched links.
pub fn dobrushin_google(g: &GoogleMatrix) -> Dobrushin {
    let inner = dobrushin(&g.patched_links());
    Dobrushin { delta: g.damping() * inner.delta, ..inner }
}

pub fn dobrushin_dense(p: &DenseMatrix) -> f64 {
    let n = p.n();
    let mut min_overlap = f64::INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            let s: f64 = p.row(a).iter().zip(p.row(b)).map(|(x, y)| x.min(*y)).sum();
            min_overlap = min_overlap.min(s);
        }
    }
    if n < 2 {
        0.0
    } else {
        (1.0 - min_overlap).clamp(0.0, 1.0)
    }
}

/// Which rate result a bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    DobrushinCyclic,
    CyclicEta,
    RandomA,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    pub kind: BoundKind,
    /// Contraction factor per `per_steps` steps, or the exponent `a`.
    pub rate: f64,
    pub constant: f64,
    pub per_steps: u64,
}

impl RateBound {
    /// `||C_t||_1 <= 2 delta^{-1} delta^{t/m}` for a schedule covering all nodes
    /// every `m` steps.
    pub fn dobrushin_cyclic(delta: f64, m: u64) -> Self {
        Self { kind: BoundKind::DobrushinCyclic, rate: delta, constant: 2.0 / delta, per_steps: m }
    }

    /// `||C_t||_1 <= 2 (1 - eta^2)^{floor((t-1)/(r m))}`.
    pub fn cyclic_eta(eta: f64, r: u64, m: u64) -> Self {
        Self { kind: BoundKind::CyclicEta, rate: 1.0 - eta * eta, constant: 2.0, per_steps: r * m }
    }

    /// Asymptotic envelope `e^{-a t}`.
    pub fn random(a: f64) -> Self {
        Self { kind: BoundKind::RandomA, rate: a, constant: 1.0, per_steps: 1 }
    }

    pub fn at(&self, t: u64) -> f64 {
        match self.kind {
            BoundKind::DobrushinCyclic => self.constant * self.rate.powf(t as f64 / self.per_steps as f64),
            BoundKind::CyclicEta => {
                let k = t.saturating_sub(1) / self.per_steps;
                self.constant * self.rate.powi(k as i32)
            }
            BoundKind::RandomA => self.constant * (-self.rate * t as f64).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclicReport {
    pub r: usize,
    pub eta: f64,
    pub column: usize,
    /// The cycle product `P(G_1) ... P(G_m)`.
    pub product: DenseMatrix,
    pub bound: RateBound,
}

/// `I - I(G)(I - P)`: rows in `g` come from `p`, others are identity rows.
pub fn green_light_matrix(p: &DenseMatrix, g: &[usize]) -> DenseMatrix {
    let n = p.n();
    let mut out = DenseMatrix::identity(n);
    for &i in g {
        for j in 0..n {
            out.set(i, j, p.get(i, j));
        }
    }
    out
}

/// Finds the smallest `r <= r_max` for which some column of the cycle
/// product's `r`-th power is strictly positive. Among positive columns the
/// one with the largest minimum is reported.
pub fn cyclic_markov_check(p: &DenseMatrix, blocks: &[Vec<usize>], r_max: usize) -> Result<CyclicReport, AnalysisError> {
    let n = p.n();
    if n > DENSE_LIMIT {
        return Err(AnalysisError::TooLarge { n, max: DENSE_LIMIT });
    }
    if blocks.is_empty() || r_max == 0 {
        return Err(AnalysisError::InvalidParams("need at least one block and r_max >= 1".into()));
    }
    let mut covered = vec![false; n];
    for &i in blocks.iter().flatten() {
        if i >= n {
            return Err(AnalysisError::InvalidParams(format!("node {i} out of range")));
        }
        covered[i] = true;
    }
    if covered.iter().any(|c| !c) {
        return Err(AnalysisError::InvalidParams("blocks do not cover every node".into()));
    }
    let mut product = DenseMatrix::identity(n);
    for g in blocks {
        product = product.matmul(&green_light_matrix(p, g));
    }
    let mut power = product.clone();
    for r in 1..=r_max {
        if let Some((column, eta)) = best_positive_column(&power) {
            let bound = RateBound::cyclic_eta(eta, r as u64, blocks.len() as u64);
            return Ok(CyclicReport { r, eta, column, product, bound });
        }
        power = power.matmul(&product);
    }
    Err(AnalysisError::NotMarkov { r_max })
}

fn best_positive_column(m: &DenseMatrix) -> Option<(usize, f64)> {
    let n = m.n();
    let mut best: Option<(usize, f64)> = None;
    for j in 0..n {
        let min = (0..n).map(|i| m.get(i, j)).fold(f64::INFINITY, f64::min);
        if min > 0.0 && best.is_none_or(|(_, b)| min > b) {
            best = Some((j, min));
        }
    }
    best
}

/// Smallest entry of `P^{r'}` over `r' in [r, 2r]`. The random-schedule rate
/// needs this positive for every `r' >= r`; only the finite window is checked,
/// so a positive answer is conditional.
pub fn uniform_positivity(p: &DenseMatrix, r: usize) -> Result<f64, AnalysisError> {
    if r == 0 {
        return Err(AnalysisError::InvalidParams("r must be at least 1".into()));
    }
    let mut power = p.clone();
    for _ in 1..r {
        power = power.matmul(p);
    }
    let mut eta = f64::INFINITY;
    for k in r..=2 * r {
        if k > r {
            power = power.matmul(p);
        }
        let n = power.n();
        let m = (0..n).flat_map(|i| power.row(i).to_vec()).fold(f64::INFINITY, f64::min);
        eta = eta.min(m);
    }
    Ok(eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomRate {
    pub a: f64,
    pub beta: f64,
    pub eta_tilde: f64,
}

/// `J(beta)` of the random single-node rate bound.
pub fn rate_j(n: f64, r: f64, beta: f64) -> f64 {
    let one = 1.0 - 2.0 * r * beta;
    one / beta * (n * one / (n - 2.0)).ln() + 2.0 * r * (n * r * beta).ln()
}

fn rate_objective(n: f64, r: f64, log_term: f64, beta: f64) -> f64 {
    (beta * log_term).min(beta * rate_j(n, r, beta))
}

/// Number of grid points before golden-section refinement.
pub const RATE_GRID: usize = 10_000;

/// `a = sup_{0 < beta < 1/(N r)} beta min(-ln(1 - eta~), J(beta))` with
/// `eta~ = eta / 2^{r-1}`.
pub fn random_rate_bound(n: usize, r: usize, eta: f64) -> Result<RandomRate, AnalysisError> {
    if n <= 2 || r == 0 || !(eta > 0.0 && eta < 1.0) {
        return Err(AnalysisError::InvalidParams(format!("need N > 2, r >= 1, 0 < eta < 1 (got {n}, {r}, {eta})")));
    }
    let (nf, rf) = (n as f64, r as f64);
    let eta_tilde = eta * 0.5f64.powi(r as i32 - 1);
    let log_term = -(1.0 - eta_tilde).ln();
    let hi = 1.0 / (nf * rf);
    let h = hi / (RATE_GRID + 1) as f64;
    let f = |b: f64| rate_objective(nf, rf, log_term, b);
    let (mut best_k, mut best) = (1, f64::NEG_INFINITY);
    for k in 1..=RATE_GRID {
        let v = f(k as f64 * h);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let (mut lo, mut up) = ((best_k - 1) as f64 * h, (best_k + 1) as f64 * h);
    let lo_floor = h * 1e-9;
    lo = lo.max(lo_floor);
    up = up.min(hi * (1.0 - 1e-15));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = up - phi * (up - lo);
    let mut x2 = lo + phi * (up - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (up - lo);
            f2 = f(x2);
        } else {
            up = x2;
            x2 = x1;
            f2 = f1;
            x1 = up - phi * (up - lo);
            f1 = f(x1);
        }
        if up - lo < 1e-16 * hi.max(1.0) {
            break;
        }
    }
    let (beta, a) = [(best_k as f64 * h, best), (x1, f1), (x2, f2)]
        .into_iter()
        .fold((0.0, f64::NEG_INFINITY), |acc, (b, v)| if v > acc.1 { (b, v) } else { acc });
    Ok(RandomRate { a, beta, eta_tilde })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sbm2Forms {
    pub lambda2: f64,
    pub contraction_b1: f64,
    pub contraction_b2: f64,
    pub cost_ratio_asymptotic: f64,
}

/// Closed forms for the two-block mean-field model with block sizes `K n`
/// and `n`.
pub fn sbm2_closed_forms(p: f64, q: f64, k: f64) -> Result<Sbm2Forms, AnalysisError> {
    if !(q > 0.0 && q < p && p <= 1.0 && k >= 1.0) {
        return Err(AnalysisError::InvalidParams(format!("need 0 < q < p <= 1 and K >= 1 (got p={p}, q={q}, K={k})")));
    }
    Ok(Sbm2Forms {
        lambda2: (p * p - q * q) * k / ((p * k + q) * (q * k + p)),
        contraction_b1: p * k / (p * k + q),
        contraction_b2: p / (q * k + p),
        cost_ratio_asymptotic: k * k,
    })
}
