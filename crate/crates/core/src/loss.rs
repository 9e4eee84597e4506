//! Bernoulli–Poisson reconstruction losses and their gradients with respect
//! to the affiliation matrix.
//!
//! An edge `(u, v)` is present with probability `1 − exp(−F_u·F_v)`. The full
//! negative log-likelihood sums over all pairs; the balanced loss averages the
//! edge and non-edge terms separately so that sparse graphs are not dominated
//! by non-edges.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Floor on `F_u·F_v` inside `log(1 − exp(−x))`.
pub const EDGE_EPS: f64 = 1e-10;

/// Rejection-sampling attempts per non-edge sample.
pub const MAX_NONEDGE_TRIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub value: f64,
    pub edge_term: f64,
    pub nonedge_term: f64,
    pub n_edge_samples: usize,
    pub n_nonedge_samples: usize,
}

impl LossReport {
    fn new(edge_term: f64, nonedge_term: f64, n_edge: usize, n_nonedge: usize) -> Result<Self> {
        let value = edge_term + nonedge_term;
        if !value.is_finite() {
            return Err(Error::NonFinite {
                what: "loss".into(),
                layer: None,
            });
        }
        Ok(LossReport {
            value,
            edge_term,
            nonedge_term,
            n_edge_samples: n_edge,
            n_nonedge_samples: n_nonedge,
        })
    }
}

/// `−log(1 − exp(−max(x, ε)))`.
pub fn edge_nll(x: f64) -> f64 {
    let x = x.max(EDGE_EPS);
    -(-(-x).exp_m1()).ln()
}

/// Derivative of [`edge_nll`]; zero below the floor.
pub fn edge_nll_grad(x: f64) -> f64 {
    if x > EDGE_EPS {
        -1.0 / x.exp_m1()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossMode {
    Balanced,
    /// Monte-Carlo estimate from a fresh sample of edges and non-edges.
    Stochastic { edge_batch: usize, nonedge_batch: usize },
}

impl LossMode {
    pub const DEFAULT_BATCH: usize = 20_000;

    pub fn stochastic() -> Self {
        LossMode::Stochastic {
            edge_batch: Self::DEFAULT_BATCH,
            nonedge_batch: Self::DEFAULT_BATCH,
        }
    }
}

fn check_affiliations(g: &Graph, f: ArrayView2<'_, f64>) -> Result<()> {
    if f.nrows() != g.n() {
        return Err(Error::Shape(format!(
            "affiliation matrix has {} rows for {} nodes",
            f.nrows(),
            g.n()
        )));
    }
    if f.iter().any(|&v| v < 0.0 || v.is_nan()) {
        return Err(Error::InvalidInput("affiliations must be nonnegative".into()));
    }
    Ok(())
}

fn dot(f: ArrayView2<'_, f64>, u: usize, v: usize) -> f64 {
    f.row(u).dot(&f.row(v))
}

/// Sums over unordered edges and unordered non-edges. The non-edge sum uses
/// `Σ_{u<v, (u,v)∉E} F_u·F_v = ((1ᵀF)·(1ᵀF) − Σ_u |F_u|²)/2 − Σ_{(u,v)∈E} F_u·F_v`,
/// which avoids enumerating all pairs.
struct PairSums {
    edge_nll: f64,
    nonedge_dot: f64,
    col_sums: Array1<f64>,
}

fn pair_sums(g: &Graph, f: ArrayView2<'_, f64>) -> PairSums {
    let mut edge_nll_sum = 0.0;
    let mut edge_dot = 0.0;
    for (u, v) in g.edges() {
        let x = dot(f, u, v);
        edge_nll_sum += edge_nll(x);
        edge_dot += x;
    }
    let col_sums = f.sum_axis(ndarray::Axis(0));
    let total = col_sums.dot(&col_sums);
    let diag: f64 = f.iter().map(|v| v * v).sum();
    let nonedge_dot = ((total - diag) / 2.0 - edge_dot).max(0.0);
    PairSums {
        edge_nll: edge_nll_sum,
        nonedge_dot,
        col_sums,
    }
}

/// Unbalanced negative log-likelihood over all unordered pairs.
pub fn bp_full_nll(g: &Graph, f: ArrayView2<'_, f64>) -> Result<LossReport> {
    check_affiliations(g, f)?;
    let sums = pair_sums(g, f);
    LossReport::new(sums.edge_nll, sums.nonedge_dot, g.num_edges(), g.num_nonedges())
}

/// Equal-weight expectations over uniformly drawn edges and non-edges.
pub fn bp_balanced_loss(g: &Graph, f: ArrayView2<'_, f64>) -> Result<LossReport> {
    bp_balanced_loss_with_grad(g, f).map(|(r, _)| r)
}

/// Balanced loss and `∂L/∂F`.
pub fn bp_balanced_loss_with_grad(g: &Graph, f: ArrayView2<'_, f64>) -> Result<(LossReport, Array2<f64>)> {
    check_affiliations(g, f)?;
    let n_edges = g.num_edges();
    if n_edges == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let n_non = g.num_nonedges();
    let sums = pair_sums(g, f);
    let edge_term = sums.edge_nll / n_edges as f64;
    let nonedge_term = if n_non == 0 {
        0.0
    } else {
        sums.nonedge_dot / n_non as f64
    };
    let report = LossReport::new(edge_term, nonedge_term, n_edges, n_non)?;

    let mut grad = Array2::zeros(f.raw_dim());
    let edge_w = 1.0 / n_edges as f64;
    for (u, v) in g.edges() {
        let s = edge_nll_grad(dot(f, u, v)) * edge_w;
        if s != 0.0 {
            grad.row_mut(u).scaled_add(s, &f.row(v));
            grad.row_mut(v).scaled_add(s, &f.row(u));
        }
    }
    if n_non > 0 {
        let w = 1.0 / n_non as f64;
        for u in 0..g.n() {
            let mut row = sums.col_sums.clone();
            row -= &f.row(u);
            for &v in g.neighbors(u) {
                row -= &f.row(v);
            }
            grad.row_mut(u).scaled_add(w, &row);
        }
    }
    Ok((report, grad))
}

/// A multiset of edges and non-edges on which a loss estimate is computed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairSample {
    pub edges: Vec<(usize, usize)>,
    pub nonedges: Vec<(usize, usize)>,
}

impl PairSample {
    /// Every edge and every non-edge exactly once.
    pub fn exhaustive(g: &Graph) -> Self {
        PairSample {
            edges: g.edges().collect(),
            nonedges: all_nonedges(g),
        }
    }

    /// Uniform with-replacement samples. A population no larger than its
    /// batch is enumerated instead; non-edges are found by rejection.
    pub fn draw<R: Rng + ?Sized>(g: &Graph, edge_batch: usize, nonedge_batch: usize, rng: &mut R) -> Result<Self> {
        if edge_batch == 0 || nonedge_batch == 0 {
            return Err(Error::InvalidInput("batch sizes must be at least 1".into()));
        }
        let n_edges = g.num_edges();
        if n_edges == 0 {
            return Err(Error::EmptyEdgeSet);
        }
        let edges = if n_edges <= edge_batch {
            g.edges().collect()
        } else {
            (0..edge_batch)
                .map(|_| g.directed_entry(rng.random_range(0..2 * n_edges)))
                .collect()
        };
        let n_non = g.num_nonedges();
        let nonedges = if n_non == 0 {
            log::warn!("graph is complete; non-edge term is zero");
            Vec::new()
        } else if n_non <= nonedge_batch {
            all_nonedges(g)
        } else {
            let n = g.n();
            let mut out = Vec::with_capacity(nonedge_batch);
            let mut failed = 0usize;
            for _ in 0..nonedge_batch {
                let found = (0..MAX_NONEDGE_TRIES).find_map(|_| {
                    let u = rng.random_range(0..n);
                    let v = rng.random_range(0..n);
                    (u != v && !g.has_edge(u, v)).then_some((u, v))
                });
                match found {
                    Some(p) => out.push(p),
                    None => failed += 1,
                }
            }
            if failed > 0 {
                log::warn!("{failed} non-edge samples hit the rejection cap");
            }
            out
        };
        Ok(PairSample { edges, nonedges })
    }
}

fn all_nonedges(g: &Graph) -> Vec<(usize, usize)> {
    let n = g.n();
    let mut out = Vec::with_capacity(g.num_nonedges());
    for u in 0..n {
        let nbrs = g.neighbors(u);
        let mut it = nbrs.iter().peekable();
        for v in u + 1..n {
            while it.peek().is_some_and(|&&w| w < v) {
                it.next();
            }
            if it.peek() != Some(&&v) {
                out.push((u, v));
            }
        }
    }
    out
}

/// Sample means of the edge and non-edge terms, and `∂/∂F` of their sum.
pub fn sampled_loss_with_grad(
    g: &Graph,
    f: ArrayView2<'_, f64>,
    sample: &PairSample,
) -> Result<(LossReport, Array2<f64>)> {
    check_affiliations(g, f)?;
    let mut grad = Array2::zeros(f.raw_dim());
    let mut edge_term = 0.0;
    if !sample.edges.is_empty() {
        let w = 1.0 / sample.edges.len() as f64;
        for &(u, v) in &sample.edges {
            let x = dot(f, u, v);
            edge_term += edge_nll(x);
            let s = edge_nll_grad(x) * w;
            if s != 0.0 {
                grad.row_mut(u).scaled_add(s, &f.row(v));
                grad.row_mut(v).scaled_add(s, &f.row(u));
            }
        }
        edge_term *= w;
    }
    let mut nonedge_term = 0.0;
    if !sample.nonedges.is_empty() {
        let w = 1.0 / sample.nonedges.len() as f64;
        for &(u, v) in &sample.nonedges {
            nonedge_term += dot(f, u, v);
            grad.row_mut(u).scaled_add(w, &f.row(v));
            grad.row_mut(v).scaled_add(w, &f.row(u));
        }
        nonedge_term *= w;
    }
    let report = LossReport::new(edge_term, nonedge_term, sample.edges.len(), sample.nonedges.len())?;
    Ok((report, grad))
}

/// Stochastic estimate of the balanced loss.
pub fn bp_stochastic_loss<R: Rng + ?Sized>(
    g: &Graph,
    f: ArrayView2<'_, f64>,
    edge_batch: usize,
    nonedge_batch: usize,
    rng: &mut R,
) -> Result<LossReport> {
    let sample = PairSample::draw(g, edge_batch, nonedge_batch, rng)?;
    sampled_loss_with_grad(g, f, &sample).map(|(r, _)| r)
}

/// Loss and `∂L/∂F` for either mode.
pub fn loss_with_grad<R: Rng + ?Sized>(
    g: &Graph,
    f: ArrayView2<'_, f64>,
    mode: LossMode,
    rng: &mut R,
) -> Result<(LossReport, Array2<f64>)> {
    match mode {
        LossMode::Balanced => bp_balanced_loss_with_grad(g, f),
        LossMode::Stochastic {
            edge_batch,
            nonedge_batch,
        } => {
            let sample = PairSample::draw(g, edge_batch, nonedge_batch, rng)?;
            sampled_loss_with_grad(g, f, &sample)
        }
    }
}

/// Which edges sit at or below the stability floor; part of the region
/// signature used by gradient checks.
pub fn edge_clamp_pattern(g: &Graph, f: ArrayView2<'_, f64>) -> Vec<bool> {
    g.edges().map(|(u, v)| dot(f, u, v) > EDGE_EPS).collect()
}
