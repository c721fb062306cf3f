use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rlgl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlgl")).args(args).current_dir(dir).output().expect("binary runs")
}

fn read_pi(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

/// Last row per method of a bench CSV: (cum_cost, residual).
fn finals(csv: &str) -> std::collections::BTreeMap<String, (f64, f64)> {
    let mut out = std::collections::BTreeMap::new();
    for l in csv.lines().skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        out.insert(f[0].to_string(), (f[3].parse().unwrap(), f[5].parse().unwrap()));
    }
    out
}

#[test]
fn solve_four_node_round_robin() {
    let dir = tempfile::tempdir().unwrap();
    let o = rlgl(&["solve", "--graph", "four-node", "--method", "rlgl", "--schedule", "rr", "--eps", "1e-10", "--out", "r"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let pi = read_pi(&dir.path().join("r/pi.csv"));
    let want = [2.0 / 7.0, 1.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0];
    for (a, b) in pi.iter().zip(want) {
        assert!((a - b).abs() < 1e-8);
    }
    let trace = fs::read_to_string(dir.path().join("r/trace.csv")).unwrap();
    assert!(trace.starts_with("step,updates,cum_cost,scan_cost,cash_l1,err_l1\n"));
}

#[test]
fn two_wheels_power_iteration_is_degree_proportional() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(rlgl(&["gen", "two-wheels", "tw.edges"], dir.path()).status.code(), Some(0));
    let mut deg = vec![0.0; 12];
    for l in fs::read_to_string(dir.path().join("tw.edges")).unwrap().lines().filter(|l| !l.starts_with('#')) {
        for v in l.split_whitespace().take(2) {
            deg[v.parse::<usize>().unwrap()] += 1.0;
        }
    }
    let o = rlgl(&["solve", "--graph", "two-wheels", "--method", "pi", "--eps", "1e-10"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let pi = read_pi(&dir.path().join("pi.csv"));
    // undirected walk: pi_i = deg_i / 2|E|, with 21 edges
    assert_eq!(pi.len(), 12);
    for (a, d) in pi.iter().zip(&deg) {
        assert!((a - d / 42.0).abs() < 1e-8, "{a} vs {d}");
    }
}

#[test]
fn raw_mode_rejects_disconnected_graphs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.edges"), "0 1\n1 0\n2 3\n3 2\n").unwrap();
    let o = rlgl(&["solve", "--graph", "g.edges", "--method", "pi"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("strongly connected"));
    let o = rlgl(&["solve", "--graph", "g.edges", "--method", "pi", "--lcc"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_pi(&dir.path().join("pi.csv")).len(), 2);
}

#[test]
fn exit_codes_distinguish_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let o = rlgl(&["solve", "--graph", "four-node", "--method", "pi", "--max-steps", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(dir.path().join("trace.csv").exists());
    // starting on node 0, greedy empties the history on every restart
    fs::write(dir.path().join("m0.csv"), "node,value\n0,1\n").unwrap();
    let o = rlgl(&["solve", "--graph", "four-node", "--schedule", "greedy", "--m0", "m0.csv", "--out", "d"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(!dir.path().join("d/pi.csv").exists());
    let o = rlgl(&["solve", "--graph", "nope", "--method", "pi"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = rlgl(&["solve", "--graph", "four-node", "--method", "newton"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = rlgl(&["solve", "--graph", "four-node", "--eps", "0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["bench", "--graph", "sbm80", "--lcc", "--methods", "rlgl:theta:1,pi,gs,gmres:8,rlgl:rand", "--eps", "1e-11", "--out", out]
    };
    assert_eq!(rlgl(&args("a.csv"), dir.path()).status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_rlgl"))
        .args(args("b.csv"))
        .env("RLGL_THREADS", "1")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());

    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("method,step,updates,cum_cost,scan_cost,residual,residual_kind\n"));
    let f = finals(&text);
    assert_eq!(f.len(), 5);
    assert!(f["rlgl:theta:1"].0 < f["pi"].0, "{f:?}");
    assert!(f.values().all(|&(_, r)| r <= 1e-11));
    // per-method cost never decreases
    let mut prev: std::collections::HashMap<&str, f64> = Default::default();
    for l in text.lines().skip(1) {
        let v: Vec<&str> = l.split(',').collect();
        let c: f64 = v[3].parse().unwrap();
        assert!(c >= *prev.get(v[0]).unwrap_or(&0.0));
        prev.insert(v[0], c);
    }
}

#[test]
fn bench_needs_methods_and_survives_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = rlgl(&["bench", "--graph", "four-node", "--methods="], dir.path());
    assert_eq!(o.status.code(), Some(1));
    // gso needs PageRank mode; the other method still lands in the CSV
    let o = rlgl(&["bench", "--graph", "four-node", "--methods", "gso,pi", "--out", "x.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("x.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with("pi,")));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gso"));
}

#[test]
fn gen_two_wheels_has_21_edges() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(rlgl(&["gen", "two-wheels", "tw.edges"], dir.path()).status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("tw.edges")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 21);
    // the written file loads back as the same walk
    let o = rlgl(&["solve", "--graph", "tw.edges", "--undirected", "--method", "gs", "--out", "f"], dir.path());
    let p = rlgl(&["solve", "--graph", "two-wheels", "--method", "gs", "--out", "p"], dir.path());
    assert_eq!((o.status.code(), p.status.code()), (Some(0), Some(0)));
    let a = read_pi(&dir.path().join("f/pi.csv"));
    let b = read_pi(&dir.path().join("p/pi.csv"));
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
}

#[test]
fn analyze_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = rlgl(&["analyze", "dobrushin", "--graph", "sbm80", "--damping", "0.85"], dir.path());
    let text = String::from_utf8(o.stdout).unwrap();
    let delta: f64 = text.lines().find_map(|l| l.strip_prefix("delta=")).unwrap().parse().unwrap();
    assert!(delta <= 0.85 + 1e-12);

    let o = rlgl(&["analyze", "sbm2", "--p", "0.1", "--q", "0.001", "--k", "5"], dir.path());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("cost_ratio_asymptotic=25"));

    fs::write(dir.path().join("cycle.txt"), "0\n1\n2\n3\n").unwrap();
    let o = rlgl(&["analyze", "cyclic", "--graph", "four-node", "--blocks", "cycle.txt"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("eta="));
}

#[test]
fn mdp_writes_policy_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = rlgl(
        &["mdp", "--sizes", "50,20,10", "--p", "0.1", "--q", "0.01", "--eps", "1e-10", "--grid-z1", "400", "--grid-z2", "41"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let policy = fs::read_to_string(dir.path().join("policy.csv")).unwrap();
    assert!(policy.starts_with("z1,z2,action,V\n"));
    assert_eq!(policy.lines().count(), 1 + 400 * 41);
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let actions: Vec<&str> = traj.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    let small = actions.iter().filter(|a| matches!(**a, "a2" | "a3")).count();
    assert!(small * 2 > actions.len(), "{actions:?}");
    assert!(!actions.contains(&"a7"));
}
