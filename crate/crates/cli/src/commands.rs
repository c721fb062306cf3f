use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rlgl_core::analysis::{
    cyclic_markov_check, dobrushin, dobrushin_google, random_rate_bound, sbm2_closed_forms, uniform_positivity,
};
use rlgl_core::markov::{gth_stationary, Distribution, DENSE_LIMIT};
use rlgl_core::mdp::{
    meanfield_init, simulate_policy, solve_policy, Action, ActionSource, MdpError, ThreeBlock, Trajectory,
};
use rlgl_core::models::LoadOptions;
use rlgl_core::schedule::parse_block_sequence;

use crate::method::{execute, Method, MethodRun, RunParams, Status};
use crate::problem::{build, read_distribution, BuildOptions, GraphSpec, Problem};
use crate::{AnalyzeCmd, BenchArgs, CliError, GenArgs, GraphArgs, MdpArgs, SolveArgs, SolverArgs};

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn problem(g: &GraphArgs) -> Result<Problem, CliError> {
    if let Some(c) = g.damping {
        if !(c > 0.0 && c < 1.0) {
            return Err(CliError::Config(format!("damping {c} must lie in (0, 1)")));
        }
    }
    let spec = GraphSpec::parse(&g.graph)?;
    build(
        &spec,
        &BuildOptions {
            seed: g.seed,
            lcc: g.lcc,
            damping: g.damping,
            restart: g.restart_s.clone(),
            load: LoadOptions { one_based: g.one_based, undirected: g.undirected },
        },
    )
}

fn params(s: &SolverArgs, seed: u64, oracle: Option<Vec<f64>>, m0: Option<Distribution>) -> Result<RunParams, CliError> {
    if !(s.eps > 0.0) {
        return Err(CliError::Config(format!("eps must be positive, got {}", s.eps)));
    }
    Ok(RunParams {
        eps: s.eps,
        max_steps: s.max_steps,
        seed,
        theta_r: s.theta_r,
        stride: s.trace_stride,
        pihat: s.criterion == "pihat",
        oracle,
        m0,
    })
}

fn default_schedule(s: &SolverArgs) -> String {
    match s.theta_r {
        Some(r) => format!("theta:{r}"),
        None => "rr".into(),
    }
}

pub fn solve(a: &SolveArgs) -> Result<u8, CliError> {
    let prob = problem(&a.graph)?;
    let oracle = if a.oracle {
        if prob.n() > DENSE_LIMIT {
            return Err(CliError::Config(format!("--oracle needs at most {DENSE_LIMIT} nodes")));
        }
        Some(gth_stationary(&prob.chain.to_dense()?)?.into_vec())
    } else {
        None
    };
    let method = match a.method.as_str() {
        "rlgl" => Method::Rlgl(a.schedule.clone()),
        other => Method::parse(other, &a.schedule, a.solver.gmres_m)?,
    };
    let m0 = a.m0.as_deref().map(|path| read_distribution(path, prob.n())).transpose()?;
    let run = execute(&method, &prob, &params(&a.solver, a.graph.seed, oracle, m0)?)?;
    if let Some(pi) = &run.pi {
        let mut csv = String::from("node,value\n");
        for (label, v) in prob.labels.iter().zip(pi) {
            let _ = writeln!(csv, "{label},{v:e}");
        }
        write(&a.out.join("pi.csv"), &csv)?;
    }
    write(&a.out.join("trace.csv"), &run.trace.to_csv())?;
    let last = run.trace.last();
    match run.status {
        Status::Converged => println!(
            "{} converged: n={} updates={} cum_cost={}",
            method.label(),
            prob.n(),
            last.map_or(0, |r| r.updates),
            last.map_or(0.0, |r| r.cum_cost)
        ),
        Status::NoConvergence => eprintln!("{} did not converge within {} steps", method.label(), a.solver.max_steps),
        Status::Degenerate => eprintln!("{}: total history stayed near zero after restarts", method.label()),
    }
    Ok(run.status.exit_code())
}

fn thread_cap() -> usize {
    std::env::var("RLGL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&k| k > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |k| k.get()))
}

fn bench_rows(method: &Method, run: &MethodRun, out: &mut String) {
    for r in &run.trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:e},{}",
            method.label(),
            r.step,
            r.updates,
            r.cum_cost,
            r.scan_cost,
            r.cash_l1,
            method.residual_kind()
        );
    }
}

pub fn bench(a: &BenchArgs) -> Result<u8, CliError> {
    let specs: Vec<&String> = a.methods.iter().filter(|m| !m.trim().is_empty()).collect();
    if specs.is_empty() {
        return Err(CliError::Config("--methods is empty".into()));
    }
    let methods = specs
        .iter()
        .map(|m| Method::parse(m.trim(), &default_schedule(&a.solver), a.solver.gmres_m))
        .collect::<Result<Vec<_>, _>>()?;
    let prob = problem(&a.graph)?;
    let p = params(&a.solver, a.graph.seed, None, None)?;

    let cap = thread_cap();
    let mut results: Vec<Option<Result<MethodRun, CliError>>> = (0..methods.len()).map(|_| None).collect();
    for (chunk_m, chunk_r) in methods.chunks(cap).zip(results.chunks_mut(cap)) {
        std::thread::scope(|s| {
            for (m, slot) in chunk_m.iter().zip(chunk_r.iter_mut()) {
                let (prob, p) = (&prob, &p);
                s.spawn(move || *slot = Some(execute(m, prob, p)));
            }
        });
    }

    let mut order: Vec<usize> = (0..methods.len()).collect();
    order.sort_by_key(|&i| methods[i].label());
    let mut csv = String::from("method,step,updates,cum_cost,scan_cost,residual,residual_kind\n");
    let mut failed = 0;
    for i in order {
        match results[i].take().expect("every method ran") {
            Ok(run) => {
                bench_rows(&methods[i], &run, &mut csv);
                match run.status {
                    Status::Converged => {}
                    Status::NoConvergence => eprintln!("{}: no convergence", methods[i].label()),
                    Status::Degenerate => eprintln!("{}: degenerate history", methods[i].label()),
                }
            }
            Err(e) => {
                failed += 1;
                eprintln!("{}: {e}", methods[i].label());
            }
        }
    }
    write(&a.out, &csv)?;
    println!("{} methods, {} failed, wrote {}", methods.len(), failed, a.out.display());
    Ok(0)
}

pub fn gen(a: &GenArgs) -> Result<u8, CliError> {
    let spec = GraphSpec::parse(&a.kind)?;
    if matches!(spec, GraphSpec::File(_)) {
        return Err(CliError::Config(format!("'{}' is not a generator", a.kind)));
    }
    let g = spec.edges(a.seed, LoadOptions::default())?;
    let mut text = format!("# {} nodes={}", a.kind, g.n);
    if g.undirected {
        text.push_str(" undirected: load with --undirected");
    }
    text.push('\n');
    text.push_str(&g.to_text());
    write(&a.out, &text)?;
    Ok(0)
}

fn dense_of(g: &GraphArgs) -> Result<rlgl_core::markov::DenseMatrix, CliError> {
    let prob = problem(g)?;
    if prob.n() > DENSE_LIMIT {
        return Err(CliError::Config(format!("{} nodes exceeds the dense limit {DENSE_LIMIT}", prob.n())));
    }
    Ok(prob.chain.to_dense()?)
}

pub fn analyze(cmd: &AnalyzeCmd) -> Result<u8, CliError> {
    let mut out = String::new();
    match cmd {
        AnalyzeCmd::Dobrushin { graph } => {
            let prob = problem(graph)?;
            let d = match (&prob.google, &prob.transition) {
                (Some(g), _) => dobrushin_google(g),
                (None, Some(p)) => dobrushin(p),
                _ => return Err(CliError::Config("dobrushin needs an edge-list graph".into())),
            };
            let _ = writeln!(out, "n={}", prob.n());
            if let Some(c) = graph.damping {
                let _ = writeln!(out, "damping={c}");
            }
            let _ = writeln!(out, "delta={}", d.delta);
            let _ = writeln!(out, "estimated={}", d.estimated);
        }
        AnalyzeCmd::Cyclic { graph, blocks, r_max } => {
            let dense = dense_of(graph)?;
            let text = fs::read_to_string(blocks).map_err(|e| CliError::Io(format!("{blocks}: {e}")))?;
            let seq = parse_block_sequence(&text)?;
            let rep = cyclic_markov_check(&dense, &seq, *r_max)?;
            let _ = writeln!(out, "m={}", seq.len());
            let _ = writeln!(out, "r={}", rep.r);
            let _ = writeln!(out, "eta={}", rep.eta);
            let _ = writeln!(out, "column={}", rep.column);
            let _ = writeln!(out, "rate_per_{}_steps={}", rep.bound.per_steps, rep.bound.rate);
        }
        AnalyzeCmd::Positivity { graph, r } => {
            let eta = uniform_positivity(&dense_of(graph)?, *r)?;
            let _ = writeln!(out, "r={r}");
            let _ = writeln!(out, "eta={eta}");
        }
        AnalyzeCmd::Rate { n, r, eta } => {
            let rr = random_rate_bound(*n, *r, *eta)?;
            let _ = writeln!(out, "a={}", rr.a);
            let _ = writeln!(out, "beta={}", rr.beta);
            let _ = writeln!(out, "eta_tilde={}", rr.eta_tilde);
        }
        AnalyzeCmd::Sbm2 { p, q, k } => {
            let f = sbm2_closed_forms(*p, *q, *k)?;
            let _ = writeln!(out, "lambda2={}", f.lambda2);
            let _ = writeln!(out, "contraction_b1={}", f.contraction_b1);
            let _ = writeln!(out, "contraction_b2={}", f.contraction_b2);
            let _ = writeln!(out, "cost_ratio_asymptotic={}", f.cost_ratio_asymptotic);
        }
    }
    print!("{out}");
    Ok(0)
}

fn sequence_summary(actions: &[Action]) -> String {
    let mut runs: Vec<(Action, usize)> = Vec::new();
    for &a in actions {
        match runs.last_mut() {
            Some((b, k)) if *b == a => *k += 1,
            _ => runs.push((a, 1)),
        }
    }
    runs.iter()
        .map(|(a, k)| if *k == 1 { a.name() } else { format!("{}x{k}", a.name()) })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn mdp(a: &MdpArgs) -> Result<u8, CliError> {
    let sizes: [usize; 3] = a
        .sizes
        .as_slice()
        .try_into()
        .map_err(|_| CliError::Config(format!("--sizes needs three blocks, got {}", a.sizes.len())))?;
    if a.grid_z1 < 2 || a.grid_z2 < 3 {
        return Err(CliError::Config("grid needs at least 2 x 3 cells".into()));
    }
    let m = ThreeBlock::new(sizes, a.p, a.q)?;
    let c0 = meanfield_init(&m)?;
    let grid = solve_policy(&m, &c0, a.eps, a.grid_z1, a.grid_z2)?;
    write(&a.out.join("policy.csv"), &grid.to_csv())?;

    let (traj, code): (Trajectory, u8) =
        match simulate_policy(&m, &c0, ActionSource::Policy(&grid), a.eps, a.max_steps) {
            Ok(t) => (t, 0),
            Err(MdpError::NoConvergence { trajectory, .. }) => (*trajectory, 2),
            Err(e) => return Err(e.into()),
        };
    write(&a.out.join("trajectory.csv"), &traj.to_csv(&m, a.eps))?;
    let all = simulate_policy(&m, &c0, ActionSource::Fixed(&[Action::A7]), a.eps, a.max_steps)?;

    println!("initial cash l1={:e}", c0.l1(&m));
    println!("excluded cell-actions={}", grid.excluded);
    for act in Action::ALL {
        let share = grid.action_share(&[act]);
        if share > 0.0 {
            println!("share {}={share:.3}", act.name());
        }
    }
    println!("steps={} converged={}", traj.actions.len(), traj.converged);
    println!("kappa policy={} all-nodes={} ratio={:.3}", traj.total_kappa(), all.total_kappa(), all.total_kappa() / traj.total_kappa());
    println!("sequence {}", sequence_summary(&traj.actions));
    Ok(code)
}
