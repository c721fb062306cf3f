use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
mod method;
mod problem;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] rlgl_core::models::ModelError),
    #[error(transparent)]
    Markov(#[from] rlgl_core::markov::MarkovError),
    #[error(transparent)]
    Engine(#[from] rlgl_core::engine::EngineError),
    #[error(transparent)]
    Schedule(#[from] rlgl_core::schedule::ScheduleError),
    #[error(transparent)]
    Solver(#[from] rlgl_core::solvers::SolverError),
    #[error(transparent)]
    Analysis(#[from] rlgl_core::analysis::AnalysisError),
    #[error(transparent)]
    Mdp(#[from] rlgl_core::mdp::MdpError),
}

#[derive(Debug, Parser)]
#[command(name = "rlgl", version, about = "Stationary distributions by cash-flow iteration")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one chain and write pi.csv and trace.csv.
    Solve(SolveArgs),
    /// Run several methods on one graph and write a comparison CSV.
    Bench(BenchArgs),
    /// Write a preset or generated graph as an edge list.
    Gen(GenArgs),
    /// Print a convergence diagnostic.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Solve the three-block scheduling problem.
    Mdp(MdpArgs),
}

/// Graph selection shared by the commands that build a chain.
#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Preset (four-node, two-wheels, sbm80, sbm800, harvard500, web:n[:avg[:dangling]],
    /// sbm:40,40:p:q, mf:50,20,10:p:q) or an edge-list path.
    #[arg(long)]
    pub graph: String,
    /// PageRank mode with this damping factor.
    #[arg(long)]
    pub damping: Option<f64>,
    /// Restart distribution for PageRank mode, as node,value lines.
    #[arg(long = "restart-s")]
    pub restart_s: Option<String>,
    /// Restrict to the largest strongly connected component.
    #[arg(long)]
    pub lcc: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Edge-list indices start at 1.
    #[arg(long)]
    pub one_based: bool,
    /// Add the reverse of every edge read from a file.
    #[arg(long)]
    pub undirected: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub eps: f64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_steps: u64,
    /// Exponent for theta schedules given without one.
    #[arg(long = "theta-r")]
    pub theta_r: Option<f64>,
    /// Krylov dimension for gmres given without one.
    #[arg(long = "gmres-m", default_value_t = 10)]
    pub gmres_m: usize,
    /// Trace every this many pushes (default: once per n pushes).
    #[arg(long)]
    pub trace_stride: Option<u64>,
    /// Stop on cash (default) or on the change of the estimate.
    #[arg(long, default_value = "cash", value_parser = ["cash", "pihat"])]
    pub criterion: String,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// rlgl, pi, gs, gmres[:m] or gso[:schedule].
    #[arg(long, default_value = "rlgl")]
    pub method: String,
    /// rr, rand:seed, greedy, maxc, pc:seed, theta:r[:period], blocks:FILE or all.
    #[arg(long, default_value = "rr")]
    pub schedule: String,
    /// Initial distribution as node,value lines (default uniform).
    #[arg(long)]
    pub m0: Option<String>,
    /// Fill the trace's error column against an exact solve (dense chains only).
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Comma-separated: pi, gs, gmres[:m], gso[:schedule], rlgl[:schedule].
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub methods: Vec<String>,
    /// Output CSV file.
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Graph spec as accepted by --graph (mean-field specs excluded).
    pub kind: String,
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCmd {
    /// Ergodicity coefficient of the (Google) transition matrix.
    Dobrushin {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Markov test for the product of a block cycle.
    Cyclic {
        #[command(flatten)]
        graph: GraphArgs,
        /// One block per line, whitespace-separated node ids.
        #[arg(long)]
        blocks: String,
        #[arg(long, default_value_t = 8)]
        r_max: usize,
    },
    /// Smallest positive column entry of P^r.
    Positivity {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 1)]
        r: usize,
    },
    /// Rate exponent for uniformly random single-node schedules.
    Rate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long)]
        eta: f64,
    },
    /// Closed forms for the two-block mean-field model.
    Sbm2 {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        k: f64,
    },
}

#[derive(Debug, Args)]
pub struct MdpArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,20,10")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub p: f64,
    #[arg(long, default_value_t = 0.01)]
    pub q: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub eps: f64,
    #[arg(long, default_value_t = 1400)]
    pub grid_z1: usize,
    #[arg(long, default_value_t = 81)]
    pub grid_z2: usize,
    #[arg(long, default_value_t = 100_000)]
    pub max_steps: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.exit_code() == 0 => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let res = match cli.cmd {
        Command::Solve(a) => commands::solve(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Gen(a) => commands::gen(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Mdp(a) => commands::mdp(&a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
