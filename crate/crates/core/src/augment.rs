//! Random two-hop neighborhood augmentation and per-layer dilated sampling.
//!
//! Every node `u` keeps all of its original neighbors and, for each neighbor
//! `v`, gains at most one random node `w` adjacent to `v`. Each layer then
//! aggregates over a fresh uniform half of that augmented neighborhood, so
//! the effective neighbor count stays close to the original degree while the
//! receptive field reaches two hops per layer.

use std::io::Write;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, normalize_sampled_adjacency, Graph, NormalizedAdjacency};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hop {
    First,
    Second,
}

/// Augmented neighbor lists `S′_u`: the original neighbors first, in sorted
/// order, followed by the drawn second-hop nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedNeighborhoods {
    lists: Vec<Vec<usize>>,
    hops: Vec<Vec<Hop>>,
    seed: u64,
}

impl AugmentedNeighborhoods {
    pub fn n(&self) -> usize {
        self.lists.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.lists[u]
    }

    pub fn hops(&self, u: usize) -> &[Hop] {
        &self.hops[u]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// No augmentation: `S′_u = S_u`.
    pub fn identity(g: &Graph) -> Self {
        let lists: Vec<Vec<usize>> = (0..g.n()).map(|u| g.neighbors(u).to_vec()).collect();
        let hops = lists.iter().map(|l| vec![Hop::First; l.len()]).collect();
        AugmentedNeighborhoods {
            lists,
            hops,
            seed: 0,
        }
    }

    /// `u<TAB>v:1,w:2,...` per node, external identifiers, hop tags 1 or 2.
    pub fn write_tsv<W: Write>(&self, g: &Graph, mut out: W) -> std::io::Result<()> {
        for u in 0..self.n() {
            write!(out, "{}\t", g.node_id(u))?;
            for (i, (&v, hop)) in self.lists[u].iter().zip(&self.hops[u]).enumerate() {
                if i > 0 {
                    write!(out, ",")?;
                }
                let tag = match hop {
                    Hop::First => 1,
                    Hop::Second => 2,
                };
                write!(out, "{}:{tag}", g.node_id(v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Builds `S′_u` for every node. For each original neighbor `v` (ascending),
/// one node `w` is drawn uniformly from the neighbors of `v` with `w ≠ u` and
/// `w ∉ S′_u`; neighbors without an eligible candidate contribute nothing.
pub fn augment_graph(g: &Graph, seed: u64) -> AugmentedNeighborhoods {
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // mark[w] == u  <=>  w == u or w already in S′_u
    let mut mark = vec![usize::MAX; n];
    let mut candidates = Vec::new();
    let mut lists = Vec::with_capacity(n);
    let mut hops = Vec::with_capacity(n);
    for u in 0..n {
        let first = g.neighbors(u);
        let mut list = Vec::with_capacity(2 * first.len());
        let mut tags = Vec::with_capacity(2 * first.len());
        mark[u] = u;
        for &v in first {
            mark[v] = u;
            list.push(v);
            tags.push(Hop::First);
        }
        for &v in first {
            candidates.clear();
            candidates.extend(g.neighbors(v).iter().copied().filter(|&w| mark[w] != u));
            if candidates.is_empty() {
                continue;
            }
            let w = candidates[rng.random_range(0..candidates.len())];
            mark[w] = u;
            list.push(w);
            tags.push(Hop::Second);
        }
        lists.push(list);
        hops.push(tags);
    }
    AugmentedNeighborhoods { lists, hops, seed }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanLayer {
    /// Per node, the sampled subset of `S′_u` before symmetrization.
    pub sampled: Vec<Vec<usize>>,
    pub adjacency: NormalizedAdjacency,
}

/// The per-layer propagation operators of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPlan {
    layers: Vec<PlanLayer>,
    seed: u64,
}

impl LayerPlan {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[PlanLayer] {
        &self.layers
    }

    pub fn adjacency(&self, layer: usize) -> &NormalizedAdjacency {
        &self.layers[layer].adjacency
    }

    pub fn n(&self) -> usize {
        self.layers.first().map_or(0, |l| l.adjacency.n())
    }

    /// Every layer uses the plain normalized adjacency of `g` (no dilation).
    pub fn full(g: &Graph, depth: usize) -> Result<Self> {
        check_depth(depth)?;
        let adjacency = normalize_adjacency(g);
        let sampled: Vec<Vec<usize>> = (0..g.n()).map(|u| g.neighbors(u).to_vec()).collect();
        Ok(LayerPlan {
            layers: vec![PlanLayer { sampled, adjacency }; depth],
            seed: 0,
        })
    }

    /// A plan from explicit operators, e.g. identities in tests.
    pub fn from_adjacencies(adjacencies: Vec<NormalizedAdjacency>) -> Result<Self> {
        check_depth(adjacencies.len())?;
        let n = adjacencies[0].n();
        if adjacencies.iter().any(|a| a.n() != n) {
            return Err(Error::Shape("layer operators differ in size".into()));
        }
        let layers = adjacencies
            .into_iter()
            .map(|adjacency| PlanLayer {
                sampled: (0..n)
                    .map(|u| adjacency.off_diagonal(u).collect())
                    .collect(),
                adjacency,
            })
            .collect();
        Ok(LayerPlan { layers, seed: 0 })
    }
}

fn check_depth(depth: usize) -> Result<()> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    Ok(())
}

/// Number of augmented neighbors sampled per layer.
pub fn dilated_sample_size(augmented: usize) -> usize {
    augmented.div_ceil(2)
}

/// Samples `ceil(|S′_u| / 2)` augmented neighbors per node without
/// replacement, independently per layer (layer `l` draws from stream `l` of
/// the seeded generator), and normalizes each symmetrized sample.
pub fn build_layer_plan(
    g: &Graph,
    aug: &AugmentedNeighborhoods,
    depth: usize,
    seed: u64,
) -> Result<LayerPlan> {
    check_depth(depth)?;
    if aug.n() != g.n() {
        return Err(Error::Shape(format!(
            "augmentation covers {} nodes, graph has {}",
            aug.n(),
            g.n()
        )));
    }
    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(l as u64);
        let sampled: Vec<Vec<usize>> = aug
            .lists
            .iter()
            .map(|list| {
                let mut picked = index::sample(&mut rng, list.len(), dilated_sample_size(list.len()))
                    .into_vec();
                picked.sort_unstable();
                picked.into_iter().map(|i| list[i]).collect()
            })
            .collect();
        let adjacency = normalize_sampled_adjacency(g.n(), &sampled)?;
        layers.push(PlanLayer { sampled, adjacency });
    }
    Ok(LayerPlan { layers, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerStats {
    pub layer: usize,
    pub mean_sampled: f64,
    pub min_sampled: usize,
    pub max_sampled: usize,
    /// Fraction of sampled entries that are not original neighbors.
    pub second_hop_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerOverlap {
    pub a: usize,
    pub b: usize,
    /// Node-averaged Jaccard similarity of the two layers' sampled sets,
    /// over nodes with at least one sampled neighbor.
    pub mean_jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub layers: Vec<LayerStats>,
    pub overlaps: Vec<LayerOverlap>,
}

pub fn layer_plan_stats(g: &Graph, plan: &LayerPlan) -> PlanReport {
    let n = g.n();
    let layers = plan
        .layers
        .iter()
        .enumerate()
        .map(|(layer, pl)| {
            let sizes: Vec<usize> = pl.sampled.iter().map(Vec::len).collect();
            let total: usize = sizes.iter().sum();
            let second: usize = pl
                .sampled
                .iter()
                .enumerate()
                .map(|(u, s)| s.iter().filter(|&&v| !g.has_edge(u, v)).count())
                .sum();
            LayerStats {
                layer,
                mean_sampled: if n == 0 { 0.0 } else { total as f64 / n as f64 },
                min_sampled: sizes.iter().copied().min().unwrap_or(0),
                max_sampled: sizes.iter().copied().max().unwrap_or(0),
                second_hop_fraction: if total == 0 {
                    0.0
                } else {
                    second as f64 / total as f64
                },
            }
        })
        .collect();

    let sorted: Vec<Vec<Vec<usize>>> = plan
        .layers
        .iter()
        .map(|pl| {
            pl.sampled
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    s.sort_unstable();
                    s
                })
                .collect()
        })
        .collect();
    let mut overlaps = Vec::new();
    for a in 0..sorted.len() {
        for b in a + 1..sorted.len() {
            let mut acc = 0.0;
            let mut counted = 0usize;
            for (x, y) in sorted[a].iter().zip(&sorted[b]) {
                if x.is_empty() && y.is_empty() {
                    continue;
                }
                let inter = x.iter().filter(|v| y.binary_search(v).is_ok()).count();
                acc += inter as f64 / (x.len() + y.len() - inter) as f64;
                counted += 1;
            }
            overlaps.push(LayerOverlap {
                a,
                b,
                mean_jaccard: if counted == 0 { 1.0 } else { acc / counted as f64 },
            });
        }
    }
    PlanReport { layers, overlaps }
}
