//! Test graphs and block models: mean-field and random SBMs, the two-wheels
//! graph, edge-list files and strongly connected components.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::markov::{Chain, DenseMatrix, MarkovError, TransitionMatrix, DENSE_LIMIT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("node {0} has no edges after resampling")]
    IsolatedNode(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Markov(#[from] MarkovError),
}

/// Directed weighted edges on nodes `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    /// Every edge appears in both directions; writers emit each pair once.
    pub undirected: bool,
}

impl EdgeList {
    pub fn from_undirected(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut edges = Vec::with_capacity(2 * pairs.len());
        for &(a, b) in pairs {
            edges.push((a, b, 1.0));
            if a != b {
                edges.push((b, a, 1.0));
            }
        }
        Self { n, edges, undirected: true }
    }

    /// Undirected pairs `(a, b)` with `a <= b`, in edge order.
    pub fn unique_pairs(&self) -> Vec<(usize, usize, f64)> {
        if !self.undirected {
            return self.edges.clone();
        }
        self.edges.iter().copied().filter(|&(a, b, _)| a <= b).collect()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(a, _, w) in &self.edges {
            if w > 0.0 {
                d[a] += 1;
            }
        }
        d
    }

    /// Text form accepted by [`parse_edge_list`]; undirected lists write each
    /// pair once.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (a, b, w) in self.unique_pairs() {
            if w == 1.0 {
                out.push_str(&format!("{a} {b}\n"));
            } else {
                out.push_str(&format!("{a} {b} {w}\n"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Shift indices down by one.
    pub one_based: bool,
    /// Add the reverse of every edge.
    pub undirected: bool,
}

/// Parses `src dst [weight]` lines; `#` starts a comment.
pub fn parse_edge_list(text: &str, opts: LoadOptions) -> Result<EdgeList, ModelError> {
    let mut edges = Vec::new();
    let mut n = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| ModelError::Parse { line: k + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(err(format!("expected 'src dst [weight]', got '{line}'")));
        }
        let mut idx = [0usize; 2];
        for (slot, f) in idx.iter_mut().zip(&fields) {
            let v: usize = f.parse().map_err(|_| err(format!("bad node index '{f}'")))?;
            *slot = if opts.one_based {
                v.checked_sub(1).ok_or_else(|| err("index 0 in a one-based file".into()))?
            } else {
                v
            };
        }
        let w = match fields.get(2) {
            Some(f) => f.parse::<f64>().map_err(|_| err(format!("bad weight '{f}'")))?,
            None => 1.0,
        };
        if !w.is_finite() || w < 0.0 {
            return Err(err(format!("weight {w} must be finite and nonnegative")));
        }
        n = n.max(idx[0] + 1).max(idx[1] + 1);
        edges.push((idx[0], idx[1], w));
        if opts.undirected && idx[0] != idx[1] {
            edges.push((idx[1], idx[0], w));
        }
    }
    Ok(EdgeList { n, edges, undirected: opts.undirected })
}

pub fn load_edge_list(path: &Path, opts: LoadOptions) -> Result<EdgeList, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
    parse_edge_list(&text, opts)
}

/// Twelve nodes: a hexagon with hub, a square with hub, and a bridge.
pub fn two_wheels() -> EdgeList {
    let one_based = [
        (1, 2),
        (2, 3),
        (3, 4),
        (4, 5),
        (5, 6),
        (6, 1),
        (7, 1),
        (7, 2),
        (7, 3),
        (7, 4),
        (7, 5),
        (7, 6),
        (3, 8),
        (8, 9),
        (9, 10),
        (10, 11),
        (11, 8),
        (12, 8),
        (12, 9),
        (12, 10),
        (12, 11),
    ];
    let pairs: Vec<(usize, usize)> = one_based.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
    EdgeList::from_undirected(12, &pairs)
}

fn check_sbm(sizes: &[usize], p: f64, q: f64) -> Result<(), ModelError> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(ModelError::InvalidParams("block sizes must be positive".into()));
    }
    if !(q >= 0.0 && q <= p && p > 0.0 && p <= 1.0) {
        return Err(ModelError::InvalidParams(format!("need 0 <= q <= p <= 1 and p > 0 (got p={p}, q={q})")));
    }
    Ok(())
}

/// Stochastic block model with edges replaced by their probabilities, kept
/// in block form. A node's volume is its expected degree.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldSbm {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    block_of: Vec<usize>,
    p: f64,
    q: f64,
    n: usize,
    /// `D_b = N_b (p - q) + N q`.
    denom: Vec<f64>,
}

impl MeanFieldSbm {
    pub fn new(sizes: &[usize], p: f64, q: f64) -> Result<Self, ModelError> {
        check_sbm(sizes, p, q)?;
        if q == 0.0 && sizes.len() > 1 {
            return Err(ModelError::InvalidParams("q must be positive with several blocks".into()));
        }
        let n: usize = sizes.iter().sum();
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut block_of = Vec::with_capacity(n);
        let mut acc = 0;
        for (b, &s) in sizes.iter().enumerate() {
            offsets.push(acc);
            block_of.extend(std::iter::repeat_n(b, s));
            acc += s;
        }
        offsets.push(acc);
        let denom = sizes.iter().map(|&s| s as f64 * (p - q) + n as f64 * q).collect();
        Ok(Self { sizes: sizes.to_vec(), offsets, block_of, p, q, n, denom })
    }

    /// Two blocks of sizes `K n` and `n`.
    pub fn two_block(k: usize, n_small: usize, p: f64, q: f64) -> Result<Self, ModelError> {
        Self::new(&[k * n_small, n_small], p, q)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    pub fn block_nodes(&self, b: usize) -> Vec<usize> {
        (self.offsets[b]..self.offsets[b + 1]).collect()
    }

    pub fn block_range(&self, b: usize) -> std::ops::Range<usize> {
        self.offsets[b]..self.offsets[b + 1]
    }

    /// Expected degree of a node in block `b`.
    pub fn denominator(&self, b: usize) -> f64 {
        self.denom[b]
    }

    /// Transition probability from a node of block `from` to one node of block `to`.
    pub fn block_entry(&self, from: usize, to: usize) -> f64 {
        let w = if from == to { self.p } else { self.q };
        w / self.denom[from]
    }

    pub fn expand(&self) -> Result<TransitionMatrix, ModelError> {
        let rows = (0..self.n)
            .map(|i| {
                let b = self.block_of[i];
                (0..self.n).map(|j| (j, self.block_entry(b, self.block_of[j]))).filter(|e| e.1 > 0.0).collect()
            })
            .collect();
        Ok(TransitionMatrix::from_rows(self.n, rows)?)
    }

    pub fn expand_dense(&self) -> Result<DenseMatrix, ModelError> {
        if self.n > DENSE_LIMIT {
            return Err(MarkovError::TooLarge { n: self.n, max: DENSE_LIMIT }.into());
        }
        Ok(self.to_dense()?)
    }

    fn spread(&self, per_block: &[f64], out: &mut [f64]) {
        for (c, &add) in per_block.iter().enumerate() {
            if add != 0.0 {
                for o in &mut out[self.block_range(c)] {
                    *o += add;
                }
            }
        }
    }
}

impl Chain for MeanFieldSbm {
    fn len(&self) -> usize {
        self.n
    }

    fn push(&self, i: usize, mass: f64, out: &mut [f64]) {
        let b = self.block_of[i];
        let per: Vec<f64> = (0..self.num_blocks()).map(|c| mass * self.block_entry(b, c)).collect();
        self.spread(&per, out);
    }

    fn push_many(&self, moves: &[(usize, f64)], out: &mut [f64]) {
        let k = self.num_blocks();
        let mut by_block = vec![0.0; k];
        for &(i, m) in moves {
            by_block[self.block_of[i]] += m;
        }
        let per: Vec<f64> = (0..k).map(|c| (0..k).map(|b| by_block[b] * self.block_entry(b, c)).sum()).collect();
        self.spread(&per, out);
    }

    fn for_each_entry(&self, i: usize, f: &mut dyn FnMut(usize, f64)) {
        let b = self.block_of[i];
        for j in 0..self.n {
            let p = self.block_entry(b, self.block_of[j]);
            if p > 0.0 {
                f(j, p);
            }
        }
    }

    fn volume(&self, i: usize) -> f64 {
        self.denom[self.block_of[i]]
    }

    fn total_volume(&self) -> f64 {
        self.sizes.iter().zip(&self.denom).map(|(&s, d)| s as f64 * d).sum()
    }
}

/// Draws each undirected pair independently: probability `p` inside a block,
/// `q` across. If some node ends up isolated the draw is repeated once with a
/// derived seed.
pub fn random_sbm(sizes: &[usize], p: f64, q: f64, seed: u64) -> Result<EdgeList, ModelError> {
    check_sbm(sizes, p, q)?;
    let first = sample_sbm(sizes, p, q, seed);
    if isolated(&first).is_none() {
        return Ok(first);
    }
    let second = sample_sbm(sizes, p, q, seed ^ 0x9e37_79b9_7f4a_7c15);
    match isolated(&second) {
        None => Ok(second),
        Some(i) => Err(ModelError::IsolatedNode(i)),
    }
}

fn sample_sbm(sizes: &[usize], p: f64, q: f64, seed: u64) -> EdgeList {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect();
    let n = block.len();
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let prob = if block[a] == block[b] { p } else { q };
            if rng.gen::<f64>() < prob {
                pairs.push((a, b));
            }
        }
    }
    EdgeList::from_undirected(n, &pairs)
}

fn isolated(g: &EdgeList) -> Option<usize> {
    g.out_degrees().iter().position(|&d| d == 0)
}

/// Block sizes and densities of the 80-node SBM instance.
pub const SBM80: ([usize; 2], f64, f64) = ([40, 40], 0.2, 0.005);
/// Block sizes and densities of the 800-node SBM instance.
pub const SBM800: ([usize; 2], f64, f64) = ([400, 400], 0.2, 0.005);

/// Seeded directed graph with a heavy-tailed in-degree and some dangling
/// pages, used when no real web crawl is available.
pub fn web_like_digraph(n: usize, avg_out: f64, dangling_frac: f64, seed: u64) -> Result<EdgeList, ModelError> {
    if n < 2 || !(avg_out > 0.0) || !(0.0..1.0).contains(&dangling_frac) {
        return Err(ModelError::InvalidParams("need n >= 2, avg_out > 0, 0 <= dangling_frac < 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indeg = vec![1.0f64; n];
    let mut edges = Vec::new();
    let mean_links = avg_out / (1.0 - dangling_frac);
    for a in 0..n {
        if rng.gen::<f64>() < dangling_frac {
            continue;
        }
        // Geometric out-degree with the requested mean, at least one link.
        let mut d = 1;
        while rng.gen::<f64>() > 1.0 / mean_links && d < n - 1 {
            d += 1;
        }
        let mut targets: Vec<usize> = Vec::with_capacity(d);
        let total: f64 = indeg.iter().sum();
        while targets.len() < d {
            let b = if rng.gen::<f64>() < 0.5 {
                // Preferential attachment.
                let mut x = rng.gen::<f64>() * total;
                let mut pick = n - 1;
                for (j, &w) in indeg.iter().enumerate() {
                    if x < w {
                        pick = j;
                        break;
                    }
                    x -= w;
                }
                pick
            } else {
                // Nearby pages, as in a site hierarchy.
                let span = (n / 20).max(2);
                (a + n + rng.gen_range(0..2 * span) - span) % n
            };
            if b != a && !targets.contains(&b) {
                targets.push(b);
            }
        }
        for b in targets {
            indeg[b] += 1.0;
            edges.push((a, b, 1.0));
        }
    }
    Ok(EdgeList { n, edges, undirected: false })
}

/// Environment variable pointing at a one-based harvard500 edge list.
pub const HARVARD500_ENV: &str = "RLGL_HARVARD500";

/// The harvard500 crawl if [`HARVARD500_ENV`] names a readable file,
/// otherwise a seeded 500-node stand-in. The flag reports which one.
pub fn harvard500() -> Result<(EdgeList, bool), ModelError> {
    if let Ok(path) = std::env::var(HARVARD500_ENV) {
        let g = load_edge_list(Path::new(&path), LoadOptions { one_based: true, undirected: false })?;
        return Ok((g, true));
    }
    Ok((web_like_digraph(500, 5.3, 0.1, 500)?, false))
}

/// Largest strongly connected component with its relabeling.
#[derive(Debug, Clone, PartialEq)]
pub struct Scc {
    /// Original indices of the kept nodes, ascending; new index = position.
    pub nodes: Vec<usize>,
    /// `old_to_new[i]` is the new index of original node `i`, if kept.
    pub old_to_new: Vec<Option<usize>>,
    pub graph: EdgeList,
}

/// Tarjan's algorithm without recursion. Ties between equally large
/// components go to the one holding the smallest original index.
pub fn strongly_connected_components(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<usize>> {
    let mut adj_ptr = vec![0usize; n + 1];
    for &(a, _, _) in edges {
        adj_ptr[a + 1] += 1;
    }
    for i in 0..n {
        adj_ptr[i + 1] += adj_ptr[i];
    }
    let mut adj = vec![0usize; edges.len()];
    let mut fill = adj_ptr.clone();
    for &(a, b, _) in edges {
        adj[fill[a]] = b;
        fill[a] += 1;
    }
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, adj_ptr[root]));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < adj_ptr[v + 1] {
                let w = adj[*next];
                *next += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, adj_ptr[w]));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps
}

pub fn largest_scc(g: &EdgeList) -> Scc {
    let comps = strongly_connected_components(g.n, &g.edges);
    let best = comps
        .into_iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .unwrap_or_default();
    let mut old_to_new = vec![None; g.n];
    for (new, &old) in best.iter().enumerate() {
        old_to_new[old] = Some(new);
    }
    let edges = g
        .edges
        .iter()
        .filter_map(|&(a, b, w)| Some((old_to_new[a]?, old_to_new[b]?, w)))
        .collect();
    Scc { graph: EdgeList { n: best.len(), edges, undirected: g.undirected }, nodes: best, old_to_new }
}

/// Forward and backward reachability from node 0 both cover every node.
pub fn is_strongly_connected(g: &EdgeList) -> bool {
    if g.n == 0 {
        return false;
    }
    let reach = |forward: bool| {
        let mut adj = vec![Vec::new(); g.n];
        for &(a, b, w) in &g.edges {
            if w > 0.0 {
                if forward {
                    adj[a].push(b);
                } else {
                    adj[b].push(a);
                }
            }
        }
        let mut seen = vec![false; g.n];
        let mut todo = vec![0];
        seen[0] = true;
        while let Some(v) = todo.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    todo.push(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    reach(true) && reach(false)
}
