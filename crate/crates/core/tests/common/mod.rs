//! Brute-force reference implementations shared by the integration suites.
//! Everything here works on dense matrices or plain enumeration and calls
//! nothing from the crate beyond graph accessors.

#![allow(dead_code)]

use std::collections::VecDeque;

use dynares_core::{Cover, Graph};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dense_adjacency(g: &Graph) -> Vec<Vec<bool>> {
    let n = g.n();
    let mut a = vec![vec![false; n]; n];
    for (u, v) in g.edges() {
        a[u][v] = true;
        a[v][u] = true;
    }
    a
}

/// Hop distances from `src`; `usize::MAX` when unreachable.
pub fn bfs(g: &Graph, src: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &v in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Graph with `n` nodes and each pair present with probability `p`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

pub fn random_cover<R: Rng>(rng: &mut R, n: usize, k: usize, p: f64) -> Cover {
    let communities = (0..k)
        .map(|_| (0..n).filter(|_| rng.random_bool(p)).collect())
        .collect();
    Cover::new(n, communities).unwrap()
}

/// `D̃^{-1/2}(A + I)D̃^{-1/2}` where `A` is the symmetric closure of the
/// per-node neighbor lists.
pub fn dense_normalized(n: usize, lists: &[Vec<usize>]) -> Array2<f64> {
    let mut a = Array2::<f64>::eye(n);
    for (u, list) in lists.iter().enumerate() {
        for &v in list {
            a[[u, v]] = 1.0;
            a[[v, u]] = 1.0;
        }
    }
    let deg: Vec<f64> = a.rows().into_iter().map(|r| r.sum()).collect();
    Array2::from_shape_fn((n, n), |(i, j)| a[[i, j]] / (deg[i] * deg[j]).sqrt())
}

/// Balanced loss by enumerating every unordered pair.
pub fn brute_force_balanced_loss(g: &Graph, f: &Array2<f64>) -> f64 {
    let a = dense_adjacency(g);
    let n = g.n();
    let (mut edge_sum, mut edge_count) = (0.0, 0usize);
    let (mut non_sum, mut non_count) = (0.0, 0usize);
    for u in 0..n {
        for v in u + 1..n {
            let x: f64 = (0..f.ncols()).map(|c| f[[u, c]] * f[[v, c]]).sum();
            if a[u][v] {
                edge_sum += -(1.0 - (-x.max(1e-10)).exp()).ln();
                edge_count += 1;
            } else {
                non_sum += x;
                non_count += 1;
            }
        }
    }
    let non = if non_count == 0 { 0.0 } else { non_sum / non_count as f64 };
    edge_sum / edge_count as f64 + non
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountedMetrics {
    pub conductance: f64,
    pub coverage: f64,
    pub density: f64,
    pub clustering_coefficient: f64,
}

/// Per-community counts by enumeration over all pairs and triples,
/// averaged with community-size weights.
pub fn counted_metrics(g: &Graph, cover: &Cover) -> CountedMetrics {
    let a = dense_adjacency(g);
    let n = g.n();
    let mut weighted = [0.0f64; 3];
    let mut total = 0usize;
    for members in cover.communities().iter().filter(|c| !c.is_empty()) {
        let inside: Vec<bool> = (0..n).map(|u| members.contains(&u)).collect();
        let s = members.len();
        let mut volume = 0usize;
        let mut cut = 0usize;
        for &u in members {
            for v in 0..n {
                if a[u][v] {
                    volume += 1;
                    if !inside[v] {
                        cut += 1;
                    }
                }
            }
        }
        let mut internal = 0usize;
        let mut triangles = 0usize;
        for i in 0..s {
            for j in i + 1..s {
                let (u, v) = (members[i], members[j]);
                if a[u][v] {
                    internal += 1;
                }
                for &w in &members[j + 1..] {
                    if a[u][v] && a[v][w] && a[u][w] {
                        triangles += 1;
                    }
                }
            }
        }
        let conductance = if volume == 0 { 1.0 } else { cut as f64 / volume as f64 };
        let pairs = s * s.saturating_sub(1) / 2;
        let density = if s < 2 { 0.0 } else { internal as f64 / pairs as f64 };
        let triples = if s < 3 { 0.0 } else { (s * (s - 1) * (s - 2)) as f64 / 6.0 };
        let clustering = if s < 3 { 0.0 } else { triangles as f64 / triples };
        weighted[0] += conductance * s as f64;
        weighted[1] += density * s as f64;
        weighted[2] += clustering * s as f64;
        total += s;
    }
    let memberships: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            (0..cover.communities().len())
                .filter(|&c| cover.communities()[c].contains(&u))
                .collect()
        })
        .collect();
    let explained = g
        .edges()
        .filter(|&(u, v)| memberships[u].iter().any(|c| memberships[v].contains(c)))
        .count();
    CountedMetrics {
        conductance: weighted[0] / total as f64,
        coverage: explained as f64 / g.num_edges() as f64,
        density: weighted[1] / total as f64,
        clustering_coefficient: weighted[2] / total as f64,
    }
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let m = intervals + intervals % 2;
    let h = (b - a) / m as f64;
    let inner: f64 = (1..m)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + inner + f(b)) * h / 3.0
}

/// Two-sided critical value of Student's t by Simpson quadrature of the
/// unnormalized density and bisection on the upper tail.
pub fn t_quantile_by_quadrature(df: f64, alpha: f64) -> f64 {
    let g = |x: f64| (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    // x = tan θ maps [0, ∞) onto [0, π/2)
    let half_mass = simpson(
        |th: f64| {
            let c = th.cos();
            if c <= 0.0 {
                0.0
            } else {
                g(th.tan()) / (c * c)
            }
        },
        0.0,
        std::f64::consts::FRAC_PI_2,
        20_000,
    );
    let target = (0.5 - alpha / 2.0) * 2.0 * half_mass;
    let (mut lo, mut hi) = (0.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if simpson(g, 0.0, mid, 20_000) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Residual memory peak of this process in bytes, from `/proc`.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
