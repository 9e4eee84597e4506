//! Seeded random graph generators for experiments and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Cover, Graph};

/// G(n, p).
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Uniform random simple graph with exactly `m` edges, drawn by rejection.
/// Meant for sparse graphs (`m` well below `n²/2`).
pub fn random_sparse(n: usize, m: usize, seed: u64) -> Result<Graph> {
    if n < 2 || m > n * (n - 1) / 4 {
        return Err(Error::InvalidInput(format!("{m} edges is too dense for {n} nodes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::with_capacity(m);
    while seen.len() < m {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            seen.insert((u.min(v), u.max(v)));
        }
    }
    let mut edges: Vec<_> = seen.into_iter().collect();
    edges.sort_unstable();
    Graph::from_edges(n, edges)
}

/// Two communities of `size` nodes sharing `shared` of them. Pairs inside a
/// common community connect with `p_in`, all other pairs with `p_out`.
pub fn planted_overlap(size: usize, shared: usize, p_in: f64, p_out: f64, seed: u64) -> Result<(Graph, Cover)> {
    if shared > size || size == 0 {
        return Err(Error::InvalidInput("shared part must not exceed community size".into()));
    }
    let n = 2 * size - shared;
    let a: Vec<usize> = (0..size).collect();
    let b: Vec<usize> = (size - shared..n).collect();
    let in_a = |u: usize| u < size;
    let in_b = |u: usize| u >= size - shared;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let together = (in_a(u) && in_a(v)) || (in_b(u) && in_b(v));
            if rng.random_bool(if together { p_in } else { p_out }) {
                edges.push((u, v));
            }
        }
    }
    Ok((Graph::from_edges(n, edges)?, Cover::new(n, vec![a, b])?))
}
