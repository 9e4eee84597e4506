//! Cover quality metrics, cover similarity, overlap heatmaps and the
//! two-sample t-test used to compare methods.
//!
//! Conductance, density and clustering coefficient are averaged over the
//! non-empty communities with weights proportional to community size.
//! Degenerate communities follow fixed conventions: a community with neither
//! internal nor cut edges has conductance 1, and communities too small to
//! hold an edge (or a triangle) have density (or clustering coefficient) 0.

mod heatmap;
mod nmi;
mod ttest;

pub use heatmap::{overlap_heatmap_matrix, Heatmap};
pub use nmi::overlapping_nmi;
pub use ttest::{mean_and_sd, t_critical, t_test, t_test_from_samples, TTestResult, ALPHA};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{AffiliationMatrix, Cover, Graph};

/// `B_uc = 1` iff `F_uc ≥ τ`.
pub fn threshold(f: &AffiliationMatrix, tau: f64) -> Result<Cover> {
    f.threshold(tau)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunityStats {
    pub index: usize,
    pub size: usize,
    pub internal_edges: usize,
    pub cut_edges: usize,
    pub triangles: usize,
    pub conductance: f64,
    pub density: f64,
    pub clustering_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub conductance: f64,
    pub coverage: f64,
    pub density: f64,
    pub clustering_coefficient: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi: Option<f64>,
    pub communities: Vec<CommunityStats>,
}

fn check_cover(g: &Graph, cover: &Cover) -> Result<()> {
    if cover.n() != g.n() {
        return Err(Error::InvalidInput(format!(
            "cover spans {} nodes but graph has {}",
            cover.n(),
            g.n()
        )));
    }
    Ok(())
}

fn choose2(s: usize) -> f64 {
    (s * s.saturating_sub(1) / 2) as f64
}

fn choose3(s: usize) -> f64 {
    if s < 3 {
        0.0
    } else {
        (s as f64) * (s - 1) as f64 * (s - 2) as f64 / 6.0
    }
}

/// Edge and triangle counts of one community. `in_set` must be all `false`
/// on entry and is restored on exit.
fn community_stats(g: &Graph, index: usize, members: &[usize], in_set: &mut [bool]) -> CommunityStats {
    for &u in members {
        in_set[u] = true;
    }
    let mut inside_ordered = 0usize;
    let mut cut = 0usize;
    let mut triangles = 0usize;
    for &u in members {
        for &v in g.neighbors(u) {
            if in_set[v] {
                inside_ordered += 1;
            } else {
                cut += 1;
            }
        }
        for &v in g.neighbors(u).iter().filter(|&&v| v > u && in_set[v]) {
            triangles += g
                .neighbors(v)
                .iter()
                .filter(|&&w| w > v && in_set[w] && g.has_edge(u, w))
                .count();
        }
    }
    for &u in members {
        in_set[u] = false;
    }
    let size = members.len();
    let internal_edges = inside_ordered / 2;
    let conductance = if inside_ordered + cut == 0 {
        1.0
    } else {
        cut as f64 / (inside_ordered + cut) as f64
    };
    let density = if size < 2 {
        0.0
    } else {
        internal_edges as f64 / choose2(size)
    };
    let clustering_coefficient = if size < 3 {
        0.0
    } else {
        triangles as f64 / choose3(size)
    };
    CommunityStats {
        index,
        size,
        internal_edges,
        cut_edges: cut,
        triangles,
        conductance,
        density,
        clustering_coefficient,
    }
}

fn per_community(g: &Graph, cover: &Cover) -> Result<Vec<CommunityStats>> {
    check_cover(g, cover)?;
    if cover.is_empty() {
        return Err(Error::EmptyCover);
    }
    let mut in_set = vec![false; g.n()];
    Ok(cover
        .communities()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_empty())
        .map(|(i, c)| community_stats(g, i, c, &mut in_set))
        .collect())
}

fn size_weighted(stats: &[CommunityStats], metric: impl Fn(&CommunityStats) -> f64) -> f64 {
    let total: usize = stats.iter().map(|s| s.size).sum();
    stats.iter().map(|s| metric(s) * s.size as f64).sum::<f64>() / total as f64
}

/// Size-weighted average conductance; lower is better.
pub fn conductance(g: &Graph, cover: &Cover) -> Result<f64> {
    Ok(size_weighted(&per_community(g, cover)?, |s| s.conductance))
}

/// Size-weighted average edge density.
pub fn density(g: &Graph, cover: &Cover) -> Result<f64> {
    Ok(size_weighted(&per_community(g, cover)?, |s| s.density))
}

/// Size-weighted average fraction of possible triangles present.
pub fn clustering_coefficient(g: &Graph, cover: &Cover) -> Result<f64> {
    Ok(size_weighted(&per_community(g, cover)?, |s| s.clustering_coefficient))
}

/// Fraction of edges whose endpoints share at least one community.
pub fn coverage(g: &Graph, cover: &Cover) -> Result<f64> {
    check_cover(g, cover)?;
    if g.num_edges() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let memberships = cover.node_memberships();
    let explained = g
        .edges()
        .filter(|&(u, v)| {
            let (a, b) = (&memberships[u], &memberships[v]);
            a.iter().any(|c| b.binary_search(c).is_ok())
        })
        .count();
    Ok(explained as f64 / g.num_edges() as f64)
}

/// All four quality metrics, plus NMI when ground truth is supplied.
pub fn evaluate(g: &Graph, cover: &Cover, truth: Option<&Cover>) -> Result<MetricReport> {
    let communities = per_community(g, cover)?;
    let nmi = truth.map(|t| overlapping_nmi(cover, t)).transpose()?;
    Ok(MetricReport {
        conductance: size_weighted(&communities, |s| s.conductance),
        coverage: coverage(g, cover)?,
        density: size_weighted(&communities, |s| s.density),
        clustering_coefficient: size_weighted(&communities, |s| s.clustering_coefficient),
        nmi,
        communities,
    })
}
