use super::{normalize, SolverError};
use crate::engine::{RunTrace, TraceRecord};
use crate::markov::{Chain, Distribution};

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub pi: Distribution,
    pub restarts: u64,
    /// Final `||A x||_2 / ||x||_2`.
    pub residual: f64,
    /// One record per inner iteration; `cash_l1` holds the least-squares residual.
    pub trace: RunTrace,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `A x` with `A = P^T - I`, computed as the row product `x P - x`.
fn apply(chain: &dyn Chain, x: &[f64]) -> Vec<f64> {
    let mut y = chain.left_mul(x);
    y.iter_mut().zip(x).for_each(|(a, b)| *a -= b);
    y
}

fn relative_residual(chain: &dyn Chain, x: &[f64]) -> f64 {
    norm2(&apply(chain, x)) / norm2(x)
}

/// Restarted GMRES(M) on the homogeneous system `(P^T - I) x = 0`.
///
/// Arnoldi uses modified Gram-Schmidt; the small least-squares problem is
/// reduced with Givens rotations. Each cycle restarts from the current
/// iterate. The sum of `x` is invariant because the Krylov space lies in the
/// range of `A`, which is orthogonal to the all-ones vector.
pub fn gmres_restarted(
    chain: &dyn Chain,
    x0: &[f64],
    m: usize,
    eps: f64,
    max_restarts: u64,
) -> Result<GmresOutcome, SolverError> {
    let n = chain.len();
    if x0.len() != n {
        return Err(SolverError::Dimension { expected: n, got: x0.len() });
    }
    if m == 0 {
        return Err(SolverError::InvalidParameter("restart dimension must be positive".into()));
    }
    if x0.iter().all(|&v| v == 0.0) {
        return Err(SolverError::ZeroStart);
    }
    let mut x = x0.to_vec();
    if x.iter().sum::<f64>() != 0.0 {
        normalize(&mut x);
    }
    let matvec_cost = chain.total_volume();
    let mut trace = RunTrace::default();
    let mut cost = 0.0;
    let mut scan = 0u64;
    let mut step = 0u64;
    let mut residual = relative_residual(chain, &x);
    cost += matvec_cost;
    trace.records.push(TraceRecord { step, updates: 0, cum_cost: cost, scan_cost: scan, cash_l1: residual, err_l1: None });

    for cycle in 0..max_restarts {
        if residual < eps {
            return finish(x, cycle, residual, trace);
        }
        let r0: Vec<f64> = apply(chain, &x).into_iter().map(|v| -v).collect();
        cost += matvec_cost;
        let beta = norm2(&r0);
        if beta == 0.0 {
            return finish(x, cycle, 0.0, trace);
        }
        let xnorm = norm2(&x);
        let mut basis: Vec<Vec<f64>> = vec![r0.iter().map(|v| v / beta).collect()];
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        for j in 0..m {
            let mut w = apply(chain, &basis[j]);
            cost += matvec_cost;
            let mut col = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(a, b)| *a -= hij * b);
                col[i] = hij;
            }
            scan += 2 * (n * (j + 1)) as u64;
            let hnext = norm2(&w);
            col[j + 1] = hnext;
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[j].hypot(col[j + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[j] / denom, col[j + 1] / denom) };
            cs.push(c);
            sn.push(s);
            col[j] = denom;
            col[j + 1] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            h.push(col);
            k = j + 1;
            step += 1;
            trace.records.push(TraceRecord {
                step,
                updates: step,
                cum_cost: cost,
                scan_cost: scan,
                cash_l1: g[j + 1].abs() / xnorm,
                err_l1: None,
            });
            let breakdown = hnext <= 1e-14 * beta;
            if breakdown || g[j + 1].abs() < 0.5 * eps * xnorm {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for l in i + 1..k {
                acc -= h[l][i] * y[l];
            }
            y[i] = if h[i][i] != 0.0 { acc / h[i][i] } else { 0.0 };
        }
        for (yi, v) in y.iter().zip(&basis) {
            x.iter_mut().zip(v).for_each(|(a, b)| *a += yi * b);
        }
        normalize(&mut x);
        residual = relative_residual(chain, &x);
        cost += matvec_cost;
    }
    if residual < eps {
        return finish(x, max_restarts, residual, trace);
    }
    Err(SolverError::NoConvergence { iterations: max_restarts, residual, trace })
}

fn finish(x: Vec<f64>, restarts: u64, residual: f64, trace: RunTrace) -> Result<GmresOutcome, SolverError> {
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let pi = Distribution::normalized(clipped)?;
    Ok(GmresOutcome { pi, restarts, residual, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{build_transition, gth_stationary, DanglingPolicy, DenseMatrix, TransitionMatrix};

    #[test]
    fn stationary_start_needs_no_restart() {
        let p = TransitionMatrix::from_dense(&DenseMatrix::from_rows(&[vec![0.5, 0.5], vec![0.3, 0.7]]).unwrap()).unwrap();
        let out = gmres_restarted(&p, &[0.375, 0.625], 2, 1e-12, 5).unwrap();
        assert_eq!(out.restarts, 0);
    }

    #[test]
    fn two_states_one_cycle() {
        let p = TransitionMatrix::from_dense(&DenseMatrix::from_rows(&[vec![0.5, 0.5], vec![0.3, 0.7]]).unwrap()).unwrap();
        let out = gmres_restarted(&p, &[0.5, 0.5], 2, 1e-12, 5).unwrap();
        assert!(out.restarts <= 1);
        assert!((out.pi.as_slice()[0] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn four_node_and_monotone_cycle_residual() {
        let edges = [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)];
        let p = build_transition(&edges, 4, &DanglingPolicy::Reject).unwrap();
        let out = gmres_restarted(&p, &[1.0, 0.0, 0.0, 0.0], 2, 1e-12, 200).unwrap();
        let pi = gth_stationary(&p.to_dense().unwrap()).unwrap();
        for (a, b) in out.pi.as_slice().iter().zip(pi.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(matches!(gmres_restarted(&p, &[0.0; 4], 2, 1e-12, 5), Err(SolverError::ZeroStart)));
    }
}
