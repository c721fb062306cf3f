use super::{l1_diff, normalize, SolveOutcome, SolverError};
use crate::engine::{RunTrace, TraceRecord};
use crate::markov::{Chain, Distribution, GoogleMatrix, TransitionMatrix};

/// Column access to a chain, with an optional implicit rank-one term
/// `g_ij = sparse_ij + w_i s_j`.
#[derive(Debug, Clone)]
pub struct ColumnView {
    cols: Vec<Vec<(usize, f64)>>,
    rank_one: Option<(Vec<f64>, Vec<f64>)>,
    diag: Vec<f64>,
    cost: f64,
}

impl ColumnView {
    pub fn from_transition(p: &TransitionMatrix) -> Self {
        let n = p.n();
        let diag = (0..n).map(|j| p.get(j, j)).collect();
        Self { cols: p.columns(), rank_one: None, diag, cost: p.nnz() as f64 }
    }

    pub fn from_google(g: &GoogleMatrix) -> Self {
        let n = g.len();
        let c = g.damping();
        let mut cols = vec![Vec::new(); n];
        for i in 0..n {
            let (cs, vs) = g.links().row(i);
            for (&j, &p) in cs.iter().zip(vs) {
                cols[j].push((i, c * p));
            }
        }
        let s = g.restart().as_slice().to_vec();
        let w: Vec<f64> = (0..n).map(|i| if g.is_dangling(i) { 1.0 } else { 1.0 - c }).collect();
        let diag = (0..n)
            .map(|j| {
                let (cs, vs) = g.links().row(j);
                let pjj = cs.binary_search(&j).map(|k| vs[k]).unwrap_or(0.0);
                c * pjj + w[j] * s[j]
            })
            .collect();
        Self { cols, rank_one: Some((w, s)), diag, cost: g.total_volume() }
    }

    /// Dense fallback for any chain, built from its rows.
    pub fn from_chain(chain: &dyn Chain) -> Self {
        let n = chain.len();
        let mut cols = vec![Vec::new(); n];
        let mut diag = vec![0.0; n];
        for i in 0..n {
            chain.for_each_entry(i, &mut |j, p| {
                cols[j].push((i, p));
                if i == j {
                    diag[j] += p;
                }
            });
        }
        Self { cols, rank_one: None, diag, cost: chain.total_volume() }
    }

    pub fn n(&self) -> usize {
        self.cols.len()
    }
}

/// One in-place sweep in natural order:
/// `x_j <- sum_{i != j} x_i p_ij / (1 - p_jj)`, using fresh values for `i < j`.
pub fn gauss_seidel_sweep(view: &ColumnView, x: &mut [f64]) -> Result<(), SolverError> {
    let n = view.n();
    if x.len() != n {
        return Err(SolverError::Dimension { expected: n, got: x.len() });
    }
    let mut carried = match &view.rank_one {
        Some((w, _)) => x.iter().zip(w).map(|(a, b)| a * b).sum(),
        None => 0.0,
    };
    for j in 0..n {
        let d = 1.0 - view.diag[j];
        if d <= 0.0 {
            return Err(SolverError::AbsorbingState(j));
        }
        let mut acc: f64 = view.cols[j].iter().map(|&(i, p)| x[i] * p).sum();
        if let Some((_, s)) = &view.rank_one {
            acc += carried * s[j];
        }
        acc -= x[j] * view.diag[j];
        let new = acc / d;
        if let Some((w, _)) = &view.rank_one {
            carried += w[j] * (new - x[j]);
        }
        x[j] = new;
    }
    Ok(())
}

/// Repeats sweeps until successive normalized iterates differ by less than `eps`.
pub fn gauss_seidel(view: &ColumnView, x0: &Distribution, eps: f64, max_iters: u64) -> Result<SolveOutcome, SolverError> {
    let n = view.n();
    if x0.len() != n {
        return Err(SolverError::Dimension { expected: n, got: x0.len() });
    }
    if let Some(j) = view.diag.iter().position(|&d| d >= 1.0) {
        return Err(SolverError::AbsorbingState(j));
    }
    let mut x = x0.as_slice().to_vec();
    let mut trace = RunTrace::default();
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters {
        let prev = x.clone();
        gauss_seidel_sweep(view, &mut x)?;
        normalize(&mut x);
        residual = l1_diff(&x, &prev);
        trace.records.push(TraceRecord {
            step: it,
            updates: it * n as u64,
            cum_cost: it as f64 * view.cost,
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{build_transition, gth_stationary, DanglingPolicy};

    fn four_node() -> TransitionMatrix {
        let edges = [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)];
        build_transition(&edges, 4, &DanglingPolicy::Reject).unwrap()
    }

    #[test]
    fn converges_on_four_node() {
        let out = gauss_seidel(&ColumnView::from_transition(&four_node()), &Distribution::uniform(4), 1e-13, 1000).unwrap();
        let expect = [2.0 / 7.0, 1.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0];
        for (a, b) in out.pi.as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_is_fixed_point() {
        let p = four_node();
        let pi = gth_stationary(&p.to_dense().unwrap()).unwrap();
        let mut x = pi.as_slice().to_vec();
        gauss_seidel_sweep(&ColumnView::from_transition(&p), &mut x).unwrap();
        for (a, b) in x.iter().zip(pi.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn google_view_matches_dense_view() {
        let g = GoogleMatrix::from_edges(&[(0, 1, 1.0), (1, 1, 1.0), (1, 2, 1.0), (3, 0, 1.0)], 4, 0.85, Distribution::uniform(4)).unwrap();
        let a = ColumnView::from_google(&g);
        let b = ColumnView::from_chain(&g);
        let mut x = vec![0.1, 0.2, 0.3, 0.4];
        let mut y = x.clone();
        gauss_seidel_sweep(&a, &mut x).unwrap();
        gauss_seidel_sweep(&b, &mut y).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn absorbing_state_rejected() {
        let p = build_transition(&[(0, 0, 1.0), (1, 0, 1.0)], 2, &DanglingPolicy::Reject).unwrap();
        let err = gauss_seidel(&ColumnView::from_transition(&p), &Distribution::uniform(2), 1e-10, 10).unwrap_err();
        assert_eq!(err, SolverError::AbsorbingState(0));
    }
}
