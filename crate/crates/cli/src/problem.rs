//! Graph specs and the chain built from them.

use std::path::Path;

use rlgl_core::markov::{build_transition, Chain, DanglingPolicy, Distribution, GoogleMatrix, TransitionMatrix};
use rlgl_core::models::{
    harvard500, is_strongly_connected, largest_scc, load_edge_list, random_sbm, two_wheels, web_like_digraph, EdgeList,
    LoadOptions, MeanFieldSbm, SBM80, SBM800,
};
use rlgl_core::solvers::ColumnView;

use crate::CliError;

/// Where edges come from. Mean-field specs skip the edge list entirely.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    FourNode,
    TwoWheels,
    Sbm80,
    Sbm800,
    Harvard500,
    Web { n: usize, avg_out: f64, dangling: f64 },
    Sbm { sizes: Vec<usize>, p: f64, q: f64 },
    MeanField { sizes: Vec<usize>, p: f64, q: f64 },
    File(String),
}

fn sizes(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| CliError::Config(format!("bad block size '{x}'"))))
        .collect()
}

fn num(s: Option<&str>, what: &str) -> Result<f64, CliError> {
    s.ok_or_else(|| CliError::Config(format!("missing {what}")))?
        .parse()
        .map_err(|_| CliError::Config(format!("bad {what}")))
}

impl GraphSpec {
    /// `four-node`, `two-wheels`, `sbm80`, `sbm800`, `harvard500`,
    /// `web:n[:avg_out[:dangling]]`, `sbm:40,40:p:q`, `mf:50,20,10:p:q`,
    /// otherwise a path to an edge list.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        Ok(match parts.as_slice() {
            ["four-node"] => Self::FourNode,
            ["two-wheels"] => Self::TwoWheels,
            ["sbm80"] => Self::Sbm80,
            ["sbm800"] => Self::Sbm800,
            ["harvard500"] => Self::Harvard500,
            ["web", rest @ ..] if !rest.is_empty() && rest.len() <= 3 => Self::Web {
                n: rest[0].parse().map_err(|_| CliError::Config(format!("bad node count in '{s}'")))?,
                avg_out: rest.get(1).map_or(Ok(5.0), |v| num(Some(v), "average out-degree"))?,
                dangling: rest.get(2).map_or(Ok(0.1), |v| num(Some(v), "dangling fraction"))?,
            },
            ["sbm", sz, p, q] => Self::Sbm { sizes: sizes(sz)?, p: num(Some(p), "p")?, q: num(Some(q), "q")? },
            ["mf", sz, p, q] => Self::MeanField { sizes: sizes(sz)?, p: num(Some(p), "p")?, q: num(Some(q), "q")? },
            _ if Path::new(s).exists() => Self::File(s.to_string()),
            _ => return Err(CliError::Config(format!("unknown graph '{s}' (not a preset and no such file)"))),
        })
    }

    pub fn edges(&self, seed: u64, load: LoadOptions) -> Result<EdgeList, CliError> {
        Ok(match self {
            Self::FourNode => {
                let e = vec![(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)];
                EdgeList { n: 4, edges: e, undirected: false }
            }
            Self::TwoWheels => two_wheels(),
            Self::Sbm80 => random_sbm(&SBM80.0, SBM80.1, SBM80.2, seed)?,
            Self::Sbm800 => random_sbm(&SBM800.0, SBM800.1, SBM800.2, seed)?,
            Self::Harvard500 => harvard500()?.0,
            Self::Web { n, avg_out, dangling } => web_like_digraph(*n, *avg_out, *dangling, seed)?,
            Self::Sbm { sizes, p, q } => random_sbm(sizes, *p, *q, seed)?,
            Self::MeanField { .. } => return Err(CliError::Config("mean-field specs have no edge list".into())),
            Self::File(path) => load_edge_list(Path::new(path), load)?,
        })
    }
}

/// Everything a solver needs about one chain.
pub struct Problem {
    pub chain: Box<dyn Chain>,
    pub google: Option<GoogleMatrix>,
    pub transition: Option<TransitionMatrix>,
    /// Original node id of each state (identity unless the LCC was taken).
    pub labels: Vec<usize>,
}

impl Problem {
    pub fn n(&self) -> usize {
        self.chain.len()
    }

    pub fn column_view(&self) -> ColumnView {
        match (&self.google, &self.transition) {
            (Some(g), _) => ColumnView::from_google(g),
            (None, Some(p)) => ColumnView::from_transition(p),
            _ => ColumnView::from_chain(self.chain.as_ref()),
        }
    }
}

pub struct BuildOptions {
    pub seed: u64,
    pub lcc: bool,
    pub damping: Option<f64>,
    pub restart: Option<String>,
    pub load: LoadOptions,
}

/// `node,value` lines; a non-numeric first line is taken as a header.
pub fn read_distribution(path: &str, n: usize) -> Result<Distribution, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    let mut v = vec![0.0; n];
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(',');
        let (a, b) = (it.next().unwrap_or_default().trim(), it.next().unwrap_or_default().trim());
        match (a.parse::<usize>(), b.parse::<f64>()) {
            (Ok(i), Ok(x)) if i < n => v[i] = x,
            (Ok(i), Ok(_)) => return Err(CliError::Config(format!("{path}:{}: node {i} out of range", k + 1))),
            _ if k == 0 => {}
            _ => return Err(CliError::Config(format!("{path}:{}: expected node,value", k + 1))),
        }
    }
    Ok(Distribution::normalized(v)?)
}

pub fn build(spec: &GraphSpec, opts: &BuildOptions) -> Result<Problem, CliError> {
    if let GraphSpec::MeanField { sizes, p, q } = spec {
        if opts.damping.is_some() {
            return Err(CliError::Config("PageRank mode needs an edge list, not a mean-field spec".into()));
        }
        let sbm = MeanFieldSbm::new(sizes, *p, *q)?;
        let n = sbm.len();
        return Ok(Problem { chain: Box::new(sbm), google: None, transition: None, labels: (0..n).collect() });
    }
    let mut g = spec.edges(opts.seed, opts.load)?;
    let mut labels: Vec<usize> = (0..g.n).collect();
    if opts.lcc {
        let scc = largest_scc(&g);
        labels = scc.nodes;
        g = scc.graph;
    }
    match opts.damping {
        Some(c) => {
            let s = match &opts.restart {
                Some(path) => read_distribution(path, g.n)?,
                None => Distribution::uniform(g.n),
            };
            let google = GoogleMatrix::from_edges(&g.edges, g.n, c, s)?;
            Ok(Problem { chain: Box::new(google.clone()), google: Some(google), transition: None, labels })
        }
        None => {
            if !is_strongly_connected(&g) {
                return Err(CliError::Config(
                    "graph is not strongly connected; pass --lcc or use PageRank mode with --damping".into(),
                ));
            }
            let p = build_transition(&g.edges, g.n, &DanglingPolicy::Reject)?;
            Ok(Problem { chain: Box::new(p.clone()), google: None, transition: Some(p), labels })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> BuildOptions {
        BuildOptions { seed: 1, lcc: false, damping: None, restart: None, load: LoadOptions::default() }
    }

    #[test]
    fn parses_presets() {
        assert_eq!(GraphSpec::parse("two-wheels").unwrap(), GraphSpec::TwoWheels);
        assert_eq!(
            GraphSpec::parse("mf:50,20,10:0.1:0.01").unwrap(),
            GraphSpec::MeanField { sizes: vec![50, 20, 10], p: 0.1, q: 0.01 }
        );
        assert!(matches!(GraphSpec::parse("web:300").unwrap(), GraphSpec::Web { n: 300, .. }));
        assert!(GraphSpec::parse("no-such-thing").is_err());
    }

    #[test]
    fn raw_mode_requires_connectivity() {
        let spec = GraphSpec::Web { n: 100, avg_out: 3.0, dangling: 0.2 };
        assert!(matches!(build(&spec, &opts()), Err(CliError::Config(_))));
        let lcc = build(&spec, &BuildOptions { lcc: true, ..opts() }).unwrap();
        assert!(lcc.n() < 100 && lcc.labels.len() == lcc.n());
        let pr = build(&spec, &BuildOptions { damping: Some(0.85), ..opts() }).unwrap();
        assert_eq!(pr.n(), 100);
    }
}
