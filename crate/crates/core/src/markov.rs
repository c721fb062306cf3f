//! Sparse row-stochastic matrices, PageRank builders and an exact dense
//! stationary-distribution oracle.
//!
//! Every solver in the crate talks to a chain through the [`Chain`] trait,
//! which only needs "push mass along row `i`". That keeps the Google matrix
//! and the mean-field block models implicit: neither ever stores a dense row.

use thiserror::Error;

/// Tolerance used when checking that constructed rows sum to one.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Tolerance used when accepting a vector as a probability distribution.
pub const DISTRIBUTION_TOL: f64 = 1e-10;
/// Largest chain that may be expanded to a dense matrix.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarkovError {
    #[error("node {0} has no outgoing edges and no dangling policy was supplied")]
    DanglingNode(usize),
    #[error("index {index} out of range for {n} nodes")]
    InvalidIndex { index: usize, n: usize },
    #[error("edge weight {0} is negative or not finite")]
    InvalidWeight(f64),
    #[error("damping factor {0} must lie strictly between 0 and 1")]
    InvalidDamping(f64),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("chain must contain at least one node")]
    Empty,
    #[error("row {row} sums to {sum}")]
    NotStochastic { row: usize, sum: f64 },
    #[error("{n} nodes exceeds the dense limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("elimination pivot vanished at state {0}; chain is not ergodic")]
    NotErgodic(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// A row-stochastic operator that can move mass along its rows.
///
/// `push(i, m, out)` adds `m * p_ij` to `out[j]` for every `j`. Implementations
/// must be immutable so one chain can back many concurrent runs.
pub trait Chain: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, i: usize, mass: f64, out: &mut [f64]);

    /// Pushes several rows at once. Implementations with block structure
    /// override this to aggregate the moves.
    fn push_many(&self, moves: &[(usize, f64)], out: &mut [f64]) {
        for &(i, m) in moves {
            self.push(i, m, out);
        }
    }

    /// Visits every (column, probability) pair of row `i`.
    fn for_each_entry(&self, i: usize, f: &mut dyn FnMut(usize, f64));

    /// Cost of giving node `i` green light, in edge-operation units.
    fn volume(&self, i: usize) -> f64;

    fn total_volume(&self) -> f64 {
        (0..self.len()).map(|i| self.volume(i)).sum()
    }

    /// Row vector times matrix: returns `x P`.
    fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let moves: Vec<(usize, f64)> = x
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        let mut out = vec![0.0; self.len()];
        self.push_many(&moves, &mut out);
        out
    }

    fn to_dense(&self) -> Result<DenseMatrix, MarkovError> {
        let n = self.len();
        if n > DENSE_LIMIT {
            return Err(MarkovError::TooLarge { n, max: DENSE_LIMIT });
        }
        let mut d = DenseMatrix::zeros(n);
        for i in 0..n {
            self.for_each_entry(i, &mut |j, p| d.data[i * n + j] += p);
        }
        Ok(d)
    }
}

/// Compressed sparse rows with no stochastic guarantee.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseRows {
    /// Builds from per-row `(column, value)` lists. Columns are sorted and
    /// duplicates summed; zero entries are dropped.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self, MarkovError> {
        if rows.len() != n {
            return Err(MarkovError::Dimension { expected: n, got: rows.len() });
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                if j >= n {
                    return Err(MarkovError::InvalidIndex { index: j, n });
                }
                if !v.is_finite() || v < 0.0 {
                    return Err(MarkovError::InvalidWeight(v));
                }
                if v == 0.0 {
                    continue;
                }
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == j {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { n, row_ptr, cols, vals })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }
}

/// A row whose sum is off by more than the requested tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowViolation {
    pub row: usize,
    pub sum: f64,
}

/// Reports every row whose sum deviates from one by more than `tol`.
pub fn validate_stochastic(rows: &SparseRows, tol: f64) -> Vec<RowViolation> {
    (0..rows.n())
        .filter_map(|i| {
            let sum = rows.row_sum(i);
            ((sum - 1.0).abs() > tol).then_some(RowViolation { row: i, sum })
        })
        .collect()
}

/// A validated probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(values: Vec<f64>) -> Result<Self, MarkovError> {
        if values.is_empty() {
            return Err(MarkovError::Empty);
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(MarkovError::InvalidDistribution(format!("entry {v} is negative or not finite")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(MarkovError::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self(values))
    }

    /// Normalizes a nonnegative vector with positive mass.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self, MarkovError> {
        let sum: f64 = values.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(MarkovError::InvalidDistribution(format!("cannot normalize mass {sum}")));
        }
        values.iter_mut().for_each(|v| *v /= sum);
        Self::new(values)
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs at least one node");
        Self(vec![1.0 / n as f64; n])
    }

    pub fn point(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// What to do with nodes that have no outgoing weight.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum DanglingPolicy {
    #[default]
    Reject,
    SelfLoop,
    /// Replace the empty row by this distribution.
    Replace(Distribution),
}

/// Sparse row-stochastic matrix. Rows sum to one within [`ROW_SUM_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: SparseRows,
}

impl TransitionMatrix {
    pub fn from_sparse(rows: SparseRows) -> Result<Self, MarkovError> {
        if rows.n() == 0 {
            return Err(MarkovError::Empty);
        }
        if let Some(v) = validate_stochastic(&rows, ROW_SUM_TOL).first() {
            return Err(MarkovError::NotStochastic { row: v.row, sum: v.sum });
        }
        if rows.vals.iter().any(|&p| p > 1.0 + ROW_SUM_TOL) {
            return Err(MarkovError::InvalidWeight(rows.vals.iter().cloned().fold(0.0, f64::max)));
        }
        Ok(Self { rows })
    }

    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self, MarkovError> {
        Self::from_sparse(SparseRows::from_rows(n, rows)?)
    }

    pub fn from_dense(d: &DenseMatrix) -> Result<Self, MarkovError> {
        let n = d.n();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| (j, d.get(i, j))).filter(|&(_, v)| v != 0.0).collect())
            .collect();
        Self::from_rows(n, rows)
    }

    pub fn n(&self) -> usize {
        self.rows.n()
    }

    pub fn nnz(&self) -> usize {
        self.rows.nnz()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        self.rows.row(i)
    }

    /// Number of stored entries in row `i`; the node's volume weight.
    pub fn out_degree(&self, i: usize) -> usize {
        self.rows.row_len(i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn sparse(&self) -> &SparseRows {
        &self.rows
    }

    /// Column-oriented copy of the entries: `cols[j]` lists `(i, p_ij)`.
    pub fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.n()];
        for i in 0..self.n() {
            let (c, v) = self.row(i);
            for (&j, &p) in c.iter().zip(v) {
                cols[j].push((i, p));
            }
        }
        cols
    }
}

impl Chain for TransitionMatrix {
    fn len(&self) -> usize {
        self.n()
    }

    fn push(&self, i: usize, mass: f64, out: &mut [f64]) {
        let (cols, vals) = self.row(i);
        for (&j, &p) in cols.iter().zip(vals) {
            out[j] += mass * p;
        }
    }

    fn for_each_entry(&self, i: usize, f: &mut dyn FnMut(usize, f64)) {
        let (cols, vals) = self.row(i);
        for (&j, &p) in cols.iter().zip(vals) {
            f(j, p);
        }
    }

    fn volume(&self, i: usize) -> f64 {
        self.out_degree(i) as f64
    }

    fn total_volume(&self) -> f64 {
        self.nnz() as f64
    }
}

/// Normalizes an edge list into a transition matrix.
///
/// Parallel edges are merged, zero-weight edges dropped. A node whose total
/// outgoing weight is zero is handled by `dangling`.
pub fn build_transition(
    edges: &[(usize, usize, f64)],
    n: usize,
    dangling: &DanglingPolicy,
) -> Result<TransitionMatrix, MarkovError> {
    if n == 0 {
        return Err(MarkovError::Empty);
    }
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(src, dst, w) in edges {
        for index in [src, dst] {
            if index >= n {
                return Err(MarkovError::InvalidIndex { index, n });
            }
        }
        if !w.is_finite() || w < 0.0 {
            return Err(MarkovError::InvalidWeight(w));
        }
        if w > 0.0 {
            rows[src].push((dst, w));
        }
    }
    for (i, row) in rows.iter_mut().enumerate() {
        let total: f64 = row.iter().map(|&(_, w)| w).sum();
        if total > 0.0 {
            row.iter_mut().for_each(|e| e.1 /= total);
            continue;
        }
        match dangling {
            DanglingPolicy::Reject => return Err(MarkovError::DanglingNode(i)),
            DanglingPolicy::SelfLoop => row.push((i, 1.0)),
            DanglingPolicy::Replace(s) => {
                if s.len() != n {
                    return Err(MarkovError::Dimension { expected: n, got: s.len() });
                }
                row.extend(s.as_slice().iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(j, &v)| (j, v)));
            }
        }
    }
    TransitionMatrix::from_rows(n, rows)
}

fn check_damping(c: f64) -> Result<(), MarkovError> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(MarkovError::InvalidDamping(c))
    }
}

/// Google matrix `c P + (1 - c) 1 s`, with empty rows of `P` replaced by `s`.
///
/// The rank-one restart term is never materialized; only the sparse link
/// rows, the dangling flags and `s` are stored.
#[derive(Debug, Clone)]
pub struct GoogleMatrix {
    links: SparseRows,
    dangling: Vec<bool>,
    damping: f64,
    restart: Distribution,
}

impl GoogleMatrix {
    pub fn from_edges(
        edges: &[(usize, usize, f64)],
        n: usize,
        damping: f64,
        restart: Distribution,
    ) -> Result<Self, MarkovError> {
        check_damping(damping)?;
        if restart.len() != n {
            return Err(MarkovError::Dimension { expected: n, got: restart.len() });
        }
        if n == 0 {
            return Err(MarkovError::Empty);
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(src, dst, w) in edges {
            for index in [src, dst] {
                if index >= n {
                    return Err(MarkovError::InvalidIndex { index, n });
                }
            }
            if !w.is_finite() || w < 0.0 {
                return Err(MarkovError::InvalidWeight(w));
            }
            if w > 0.0 {
                rows[src].push((dst, w));
            }
        }
        let mut dangling = vec![false; n];
        for (i, row) in rows.iter_mut().enumerate() {
            let total: f64 = row.iter().map(|&(_, w)| w).sum();
            if total > 0.0 {
                row.iter_mut().for_each(|e| e.1 /= total);
            } else {
                dangling[i] = true;
            }
        }
        Ok(Self { links: SparseRows::from_rows(n, rows)?, dangling, damping, restart })
    }

    /// Wraps an already stochastic link matrix (no dangling rows).
    pub fn from_transition(p: &TransitionMatrix, damping: f64, restart: Distribution) -> Result<Self, MarkovError> {
        check_damping(damping)?;
        if restart.len() != p.n() {
            return Err(MarkovError::Dimension { expected: p.n(), got: restart.len() });
        }
        Ok(Self { links: p.sparse().clone(), dangling: vec![false; p.n()], damping, restart })
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn restart(&self) -> &Distribution {
        &self.restart
    }

    pub fn is_dangling(&self, i: usize) -> bool {
        self.dangling[i]
    }

    pub fn links(&self) -> &SparseRows {
        &self.links
    }

    /// The link matrix with dangling rows replaced by the restart vector.
    pub fn patched_links(&self) -> TransitionMatrix {
        let n = self.len();
        let rows = (0..n)
            .map(|i| {
                if self.dangling[i] {
                    self.restart.as_slice().iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(j, &v)| (j, v)).collect()
                } else {
                    let (c, v) = self.links.row(i);
                    c.iter().copied().zip(v.iter().copied()).collect()
                }
            })
            .collect();
        TransitionMatrix::from_rows(n, rows).expect("patched link rows are stochastic")
    }
}

impl Chain for GoogleMatrix {
    fn len(&self) -> usize {
        self.links.n()
    }

    fn push(&self, i: usize, mass: f64, out: &mut [f64]) {
        let s = self.restart.as_slice();
        if self.dangling[i] {
            for (o, &sj) in out.iter_mut().zip(s) {
                *o += mass * sj;
            }
            return;
        }
        let (cols, vals) = self.links.row(i);
        for (&j, &p) in cols.iter().zip(vals) {
            out[j] += mass * self.damping * p;
        }
        let r = mass * (1.0 - self.damping);
        for (o, &sj) in out.iter_mut().zip(s) {
            *o += r * sj;
        }
    }

    fn push_many(&self, moves: &[(usize, f64)], out: &mut [f64]) {
        let mut restart_mass = 0.0;
        for &(i, m) in moves {
            if self.dangling[i] {
                restart_mass += m;
                continue;
            }
            let (cols, vals) = self.links.row(i);
            for (&j, &p) in cols.iter().zip(vals) {
                out[j] += m * self.damping * p;
            }
            restart_mass += m * (1.0 - self.damping);
        }
        for (o, &sj) in out.iter_mut().zip(self.restart.as_slice()) {
            *o += restart_mass * sj;
        }
    }

    fn for_each_entry(&self, i: usize, f: &mut dyn FnMut(usize, f64)) {
        let s = self.restart.as_slice();
        if self.dangling[i] {
            for (j, &sj) in s.iter().enumerate() {
                if sj > 0.0 {
                    f(j, sj);
                }
            }
            return;
        }
        let (cols, vals) = self.links.row(i);
        let mut k = 0;
        for (j, &sj) in s.iter().enumerate() {
            let mut p = (1.0 - self.damping) * sj;
            if k < cols.len() && cols[k] == j {
                p += self.damping * vals[k];
                k += 1;
            }
            if p > 0.0 {
                f(j, p);
            }
        }
    }

    /// Link count of the row; the restart term counts as one rank-one update.
    fn volume(&self, i: usize) -> f64 {
        if self.dangling[i] {
            1.0
        } else {
            self.links.row_len(i) as f64
        }
    }
}

/// Extends `p` with an auxiliary node 0 so that Gauss-Southwell PageRank
/// becomes a special case of the cash iteration.
///
/// Row 0 is `(c, (1 - c) s)`; row `i + 1` is `(1 - c, c p_i)`. The lower-right
/// block stores `c * p_ij` exactly.
pub fn augment_pagerank(p: &TransitionMatrix, c: f64, s: &Distribution) -> Result<TransitionMatrix, MarkovError> {
    check_damping(c)?;
    let n = p.n();
    if s.len() != n {
        return Err(MarkovError::Dimension { expected: n, got: s.len() });
    }
    let mut rows = Vec::with_capacity(n + 1);
    let mut head = vec![(0, c)];
    head.extend(s.as_slice().iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(j, &v)| (j + 1, (1.0 - c) * v)));
    rows.push(head);
    for i in 0..n {
        let (cols, vals) = p.row(i);
        let mut row = vec![(0, 1.0 - c)];
        row.extend(cols.iter().zip(vals).map(|(&j, &v)| (j + 1, c * v)));
        rows.push(row);
    }
    TransitionMatrix::from_rows(n + 1, rows)
}

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MarkovError> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(MarkovError::Dimension { expected: n, got: r.len() });
            }
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for (i, &xi) in x.iter().enumerate() {
            for j in 0..n {
                out[j] += xi * self.data[i * n + j];
            }
        }
        out
    }
}

/// Exact stationary distribution by Grassmann-Taksar-Heyman elimination.
///
/// The elimination never subtracts, so the result is componentwise accurate
/// to near machine precision for ergodic chains.
pub fn gth_stationary(p: &DenseMatrix) -> Result<Distribution, MarkovError> {
    let n = p.n();
    if n == 0 {
        return Err(MarkovError::Empty);
    }
    if n > DENSE_LIMIT {
        return Err(MarkovError::TooLarge { n, max: DENSE_LIMIT });
    }
    let mut a = p.data.clone();
    for k in (1..n).rev() {
        let s: f64 = a[k * n..k * n + k].iter().sum();
        if !(s > 0.0) {
            return Err(MarkovError::NotErgodic(k));
        }
        for i in 0..k {
            a[i * n + k] /= s;
        }
        for i in 0..k {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..k {
                a[i * n + j] += aik * a[k * n + j];
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for j in 1..n {
        pi[j] = (0..j).map(|i| pi[i] * a[i * n + j]).sum();
    }
    Distribution::normalized(pi)
}
