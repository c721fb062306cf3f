#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rlgl_core::markov::{build_transition, DanglingPolicy, TransitionMatrix};

/// Irreducible and aperiodic: a Hamiltonian cycle, one self-loop and a few
/// random extra arcs per node with random weights.
pub fn random_ergodic(n: usize, extra: usize, seed: u64) -> TransitionMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push((i, (i + 1) % n, rng.gen_range(0.5..2.0)));
        for _ in 0..extra {
            edges.push((i, rng.gen_range(0..n), rng.gen_range(0.1..2.0)));
        }
    }
    edges.push((0, 0, 1.0));
    build_transition(&edges, n, &DanglingPolicy::Reject).unwrap()
}

pub fn four_node() -> TransitionMatrix {
    let edges = [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)];
    build_transition(&edges, 4, &DanglingPolicy::Reject).unwrap()
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
