//! Sparse undirected graphs, node features, covers and the symmetric
//! GCN propagation operator `D̃^{-1/2} (A + I) D̃^{-1/2}`.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Undirected simple graph in CSR form. Neighbor lists are sorted, symmetric,
/// and free of self-loops and duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    node_ids: Vec<String>,
}

/// Counters reported while reading an edge list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeListStats {
    pub lines: usize,
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
}

impl Graph {
    /// Builds a canonical graph on `n` nodes. Self-loops are dropped and
    /// duplicate or reversed pairs collapse to a single edge.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let ids = (0..n).map(|i| i.to_string()).collect();
        Self::build(ids, edges).map(|(g, _)| g)
    }

    fn build<I>(node_ids: Vec<String>, edges: I) -> Result<(Self, EdgeListStats)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let n = node_ids.len();
        let mut stats = EdgeListStats::default();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (u, v) in edges {
            stats.lines += 1;
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                stats.self_loops_dropped += 1;
                continue;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut stored = 0usize;
        for row in adj.iter_mut() {
            row.sort_unstable();
            let before = row.len();
            row.dedup();
            stored += before;
            stats.duplicates_collapsed += before - row.len();
            targets.extend_from_slice(row);
            offsets.push(targets.len());
        }
        // each duplicate line was counted once per endpoint
        stats.duplicates_collapsed /= 2;
        debug_assert_eq!(stored % 2, 0);
        Ok((
            Graph {
                offsets,
                targets,
                node_ids,
            },
            stats,
        ))
    }

    /// Reads a whitespace-separated edge list. Lines starting with `#` and
    /// blank lines are skipped. Node identifiers are remapped to dense indices
    /// in order of first appearance.
    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<(Self, EdgeListStats)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_edge_list(&text, path)
    }

    pub fn parse_edge_list(text: &str, path: &Path) -> Result<(Self, EdgeListStats)> {
        let mut ids: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut pairs = Vec::new();
        let mut intern = |tok: &str| -> usize {
            if let Some(&i) = index.get(tok) {
                return i;
            }
            let i = ids.len();
            ids.push(tok.to_string());
            index.insert(tok.to_string(), i);
            i
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("expected 2 node identifiers, found {}", toks.len()),
                });
            }
            let u = intern(toks[0]);
            let v = intern(toks[1]);
            pairs.push((u, v));
        }
        let (g, stats) = Self::build(ids, pairs)?;
        if g.num_edges() == 0 {
            return Err(Error::EmptyEdgeSet);
        }
        if stats.self_loops_dropped > 0 {
            log::warn!(
                "{}: dropped {} self-loop line(s)",
                path.display(),
                stats.self_loops_dropped
            );
        }
        Ok((g, stats))
    }

    /// Writes one `u v` line per undirected edge using external identifiers.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(out, "{} {}", self.node_ids[u], self.node_ids[v])?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u)
                .map(move |&v| (u, v))
        })
    }

    /// Number of unordered node pairs that are not edges.
    pub fn num_nonedges(&self) -> usize {
        let n = self.n();
        n * n.saturating_sub(1) / 2 - self.num_edges()
    }

    /// The `i`-th entry of the directed adjacency (`0 ≤ i < 2|E|`). Uniform
    /// draws of `i` are uniform draws over undirected edges.
    pub fn directed_entry(&self, i: usize) -> (usize, usize) {
        let u = self.offsets.partition_point(|&o| o <= i) - 1;
        (u, self.targets[i])
    }

    pub fn node_id(&self, u: usize) -> &str {
        &self.node_ids[u]
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    /// Dense index of an external identifier.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        // linear scan is fine for CLI-sized lookups; bulk lookups use `id_map`
        self.node_ids.iter().position(|s| s == id)
    }

    pub fn id_map(&self) -> HashMap<&str, usize> {
        self.node_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect()
    }

    /// Nodes at distance exactly two from `u`, sorted ascending.
    pub fn two_hop_neighbors(&self, u: usize) -> Vec<usize> {
        let first = self.neighbors(u);
        let mut out: Vec<usize> = first
            .iter()
            .flat_map(|&v| self.neighbors(v).iter().copied())
            .filter(|&w| w != u && first.binary_search(&w).is_err())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Node feature matrix. The identity case is kept implicit so that
/// featureless graphs never materialize an `n × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeFeatures {
    Identity { n: usize },
    Dense(Array2<f64>),
}

impl NodeFeatures {
    pub fn identity(n: usize) -> Self {
        NodeFeatures::Identity { n }
    }

    pub fn rows(&self) -> usize {
        match self {
            NodeFeatures::Identity { n } => *n,
            NodeFeatures::Dense(x) => x.nrows(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            NodeFeatures::Identity { n } => *n,
            NodeFeatures::Dense(x) => x.ncols(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, NodeFeatures::Identity { .. })
    }

    /// Reads a CSV whose first column is a node identifier of `g` and whose
    /// remaining columns are real-valued features. Every node needs a row.
    pub fn load_csv(path: impl AsRef<Path>, g: &Graph) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ids = g.id_map();
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; g.n()];
        let mut dim = None;
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let id = fields.next().unwrap_or_default();
            let values: std::result::Result<Vec<f64>, _> = fields.map(str::parse::<f64>).collect();
            let values = match values {
                Ok(v) => v,
                // tolerate a header line
                Err(_) if lineno == 0 => continue,
                Err(e) => return Err(parse_err(lineno + 1, e.to_string())),
            };
            let &u = ids
                .get(id)
                .ok_or_else(|| parse_err(lineno + 1, format!("unknown node id {id:?}")))?;
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(parse_err(
                        lineno + 1,
                        format!("expected {d} feature columns, found {}", values.len()),
                    ))
                }
                _ => {}
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(parse_err(lineno + 1, "non-finite feature".into()));
            }
            rows[u] = Some(values);
        }
        let d = dim.ok_or_else(|| Error::InvalidInput(format!("{}: no feature rows", path.display())))?;
        if d == 0 {
            return Err(Error::InvalidInput("feature rows have no columns".into()));
        }
        let mut x = Array2::zeros((g.n(), d));
        for (u, row) in rows.into_iter().enumerate() {
            let row = row.ok_or_else(|| {
                Error::InvalidInput(format!("no features for node {:?}", g.node_id(u)))
            })?;
            x.row_mut(u).assign(&ndarray::Array1::from(row));
        }
        Ok(NodeFeatures::Dense(x))
    }
}

/// Square sparse matrix in CSR layout with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        let r = self.offsets[u]..self.offsets[u + 1];
        match self.cols[r.clone()].binary_search(&v) {
            Ok(i) => self.vals[r.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for u in 0..self.n {
            for (v, a) in self.row(u) {
                out[[u, v]] = a;
            }
        }
        out
    }

    /// Sparse-dense product `self · x`.
    pub fn matmul(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.n, "spmm row mismatch");
        let mut out = Array2::zeros((self.n, x.ncols()));
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(u, mut dst)| {
                for (v, a) in self.row(u) {
                    dst.scaled_add(a, &x.row(v));
                }
            });
        out
    }

    /// Rows of the sampled neighbor lists underlying this operator, excluding
    /// the diagonal.
    pub fn off_diagonal(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(u).map(|(v, _)| v).filter(move |&v| v != u)
    }
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` over the edges of `g`.
pub fn normalize_adjacency(g: &Graph) -> NormalizedAdjacency {
    let rows: Vec<Vec<usize>> = (0..g.n()).map(|u| g.neighbors(u).to_vec()).collect();
    normalize_symmetric_rows(rows)
}

/// Normalizes a per-node sampled neighbor set. The sampled relation is first
/// symmetrized (if `u` sampled `v`, both `(u, v)` and `(v, u)` are present),
/// then self-loops are added and the symmetric normalization is applied.
pub fn normalize_sampled_adjacency(n: usize, sampled: &[Vec<usize>]) -> Result<NormalizedAdjacency> {
    if sampled.len() != n {
        return Err(Error::Shape(format!(
            "{} neighbor lists for {n} nodes",
            sampled.len()
        )));
    }
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, list) in sampled.iter().enumerate() {
        for &v in list {
            if v >= n {
                return Err(Error::InvalidInput(format!(
                    "sampled neighbor {v} of node {u} out of range"
                )));
            }
            if v == u {
                continue;
            }
            rows[u].push(v);
            rows[v].push(u);
        }
    }
    for row in rows.iter_mut() {
        row.sort_unstable();
        row.dedup();
    }
    Ok(normalize_symmetric_rows(rows))
}

fn normalize_symmetric_rows(rows: Vec<Vec<usize>>) -> NormalizedAdjacency {
    let n = rows.len();
    let inv_sqrt: Vec<f64> = rows
        .iter()
        .map(|r| 1.0 / ((r.len() + 1) as f64).sqrt())
        .collect();
    let nnz: usize = rows.iter().map(|r| r.len() + 1).sum();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    offsets.push(0);
    for (u, row) in rows.iter().enumerate() {
        let split = row.partition_point(|&v| v < u);
        let diag = std::iter::once(u);
        for v in row[..split].iter().copied().chain(diag).chain(row[split..].iter().copied()) {
            cols.push(v);
            vals.push(inv_sqrt[u] * inv_sqrt[v]);
        }
        offsets.push(cols.len());
    }
    NormalizedAdjacency {
        n,
        offsets,
        cols,
        vals,
    }
}

/// A set of (possibly overlapping, possibly empty) communities over `n`
/// nodes. Empty communities are retained so that column indices stay aligned
/// with the affiliation matrix they came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    n: usize,
    communities: Vec<Vec<usize>>,
}

/// Ground-truth communities share the cover representation.
pub type GroundTruthCover = Cover;

impl Cover {
    pub fn new(n: usize, communities: Vec<Vec<usize>>) -> Result<Self> {
        let mut communities = communities;
        for c in communities.iter_mut() {
            if let Some(&bad) = c.iter().find(|&&u| u >= n) {
                return Err(Error::InvalidInput(format!(
                    "community member {bad} out of range for {n} nodes"
                )));
            }
            c.sort_unstable();
            c.dedup();
        }
        Ok(Cover { n, communities })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// All communities including empty ones.
    pub fn communities(&self) -> &[Vec<usize>] {
        &self.communities
    }

    /// Non-empty communities only.
    pub fn sets(&self) -> impl Iterator<Item = &[usize]> {
        self.communities
            .iter()
            .filter(|c| !c.is_empty())
            .map(Vec::as_slice)
    }

    pub fn num_nonempty(&self) -> usize {
        self.sets().count()
    }

    pub fn is_empty(&self) -> bool {
        self.num_nonempty() == 0
    }

    /// Binary membership matrix `B` (n × k).
    pub fn membership(&self) -> Array2<u8> {
        let mut b = Array2::zeros((self.n, self.communities.len()));
        for (c, members) in self.communities.iter().enumerate() {
            for &u in members {
                b[[u, c]] = 1;
            }
        }
        b
    }

    /// Community indices each node belongs to.
    pub fn node_memberships(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        for (c, members) in self.communities.iter().enumerate() {
            for &u in members {
                out[u].push(c);
            }
        }
        out
    }

    /// Reads `node_id c1 c2 ...` lines. Community labels are arbitrary tokens,
    /// numbered in order of first appearance. Nodes absent from the file
    /// belong to no community.
    pub fn load(path: impl AsRef<Path>, g: &Graph) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ids = g.id_map();
        let mut labels: HashMap<String, usize> = HashMap::new();
        let mut communities: Vec<Vec<usize>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut toks = line.split_whitespace();
            let id = toks.next().unwrap_or_default();
            let &u = ids.get(id).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("unknown node id {id:?}"),
            })?;
            for label in toks {
                let next = labels.len();
                let c = *labels.entry(label.to_string()).or_insert(next);
                if c == communities.len() {
                    communities.push(Vec::new());
                }
                communities[c].push(u);
            }
        }
        let cover = Cover::new(g.n(), communities)?;
        if cover.is_empty() {
            return Err(Error::EmptyCover);
        }
        Ok(cover)
    }

    /// Writes one line per node: its identifier followed by its community
    /// indices.
    pub fn write<W: Write>(&self, node_ids: &[String], mut out: W) -> std::io::Result<()> {
        for (u, cs) in self.node_memberships().iter().enumerate() {
            write!(out, "{}", node_ids[u])?;
            for c in cs {
                write!(out, " {c}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Nonnegative `n × k` community-strength matrix with the node identifiers
/// of its rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AffiliationMatrix {
    values: Array2<f64>,
    node_ids: Vec<String>,
}

impl AffiliationMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let ids = (0..values.nrows()).map(|i| i.to_string()).collect();
        Self::with_ids(values, ids)
    }

    pub fn with_ids(values: Array2<f64>, node_ids: Vec<String>) -> Result<Self> {
        if node_ids.len() != values.nrows() {
            return Err(Error::Shape(format!(
                "{} node ids for {} rows",
                node_ids.len(),
                values.nrows()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "affiliations must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(AffiliationMatrix { values, node_ids })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn k(&self) -> usize {
        self.values.ncols()
    }

    /// `B_uc = 1` iff `F_uc ≥ τ`.
    pub fn threshold(&self, tau: f64) -> Result<Cover> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "threshold must lie in (0, 1], got {tau}"
            )));
        }
        let communities = (0..self.k())
            .map(|c| {
                self.values
                    .column(c)
                    .iter()
                    .enumerate()
                    .filter(|(_, &f)| f >= tau)
                    .map(|(u, _)| u)
                    .collect()
            })
            .collect();
        Cover::new(self.n(), communities)
    }

    /// Reorders rows to follow the node indexing of `g`.
    pub fn align_to(&self, g: &Graph) -> Result<Self> {
        if self.n() != g.n() {
            return Err(Error::InvalidInput(format!(
                "affiliation matrix has {} rows but graph has {} nodes",
                self.n(),
                g.n()
            )));
        }
        let ids = g.id_map();
        let mut out = Array2::zeros(self.values.raw_dim());
        let mut seen = vec![false; g.n()];
        for (r, id) in self.node_ids.iter().enumerate() {
            let &u = ids
                .get(id.as_str())
                .ok_or_else(|| Error::InvalidInput(format!("node {id:?} not in graph")))?;
            if std::mem::replace(&mut seen[u], true) {
                return Err(Error::InvalidInput(format!("node {id:?} listed twice")));
            }
            out.row_mut(u).assign(&self.values.row(r));
        }
        Self::with_ids(out, g.node_ids().to_vec())
    }

    /// TSV with header `node k0 k1 ...`, one row per node, values printed with
    /// six significant digits.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "node")?;
        for c in 0..self.k() {
            write!(out, "\tk{c}")?;
        }
        writeln!(out)?;
        for (u, row) in self.values.outer_iter().enumerate() {
            write!(out, "{}", self.node_ids[u])?;
            for &v in row {
                write!(out, "\t{}", format_sig6(v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let k = header.split_whitespace().count().saturating_sub(1);
        if k == 0 {
            return Err(err(1, "header has no community columns".into()));
        }
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (lineno, line) in lines {
            let mut toks = line.split_whitespace();
            let id = toks.next().unwrap_or_default();
            let row: std::result::Result<Vec<f64>, _> = toks.map(str::parse::<f64>).collect();
            let row = row.map_err(|e| err(lineno + 1, e.to_string()))?;
            if row.len() != k {
                return Err(err(
                    lineno + 1,
                    format!("expected {k} values, found {}", row.len()),
                ));
            }
            ids.push(id.to_string());
            data.extend(row);
        }
        let values = Array2::from_shape_vec((ids.len(), k), data)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Self::with_ids(values, ids)
    }
}

/// Formats like C's `%.6g`.
pub fn format_sig6(x: f64) -> String {
    const SIG: i32 = 6;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..SIG).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn parses_simple_edge_list() {
        let (g, _) = Graph::parse_edge_list("0 1\n1 2\n", Path::new("x")).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn dedups_and_drops_self_loops() {
        let (g, stats) =
            Graph::parse_edge_list("# comment\na b\nb a\na a\n", Path::new("x")).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.num_edges(), 1);
        assert_eq!(stats.self_loops_dropped, 1);
        assert_eq!(stats.duplicates_collapsed, 1);
        assert_eq!(g.node_id(0), "a");
    }

    #[test]
    fn rejects_bad_lines_and_empty_graphs() {
        assert!(matches!(
            Graph::parse_edge_list("0 1 2\n", Path::new("x")),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Graph::parse_edge_list("0 0\n", Path::new("x")),
            Err(Error::EmptyEdgeSet)
        ));
        assert!(matches!(
            Graph::load_edge_list("/definitely/not/here.tsv"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn isolated_node_normalizes_to_identity() {
        let g = Graph::from_edges(1, []).unwrap();
        assert_eq!(normalize_adjacency(&g).to_dense(), ndarray::arr2(&[[1.0]]));
    }

    #[test]
    fn triangle_normalizes_to_thirds() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let a = normalize_adjacency(&g).to_dense();
        for v in a.iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn path_normalization_closed_form() {
        let a = normalize_adjacency(&path3());
        let s6 = 1.0 / 6f64.sqrt();
        assert!((a.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((a.get(0, 1) - s6).abs() < 1e-15);
        assert!((a.get(1, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((a.get(1, 2) - s6).abs() < 1e-15);
        assert!((a.get(2, 2) - 0.5).abs() < 1e-15);
        assert_eq!(a.get(0, 2), 0.0);
    }

    #[test]
    fn sampled_normalization_cases() {
        let empty = normalize_sampled_adjacency(3, &[vec![], vec![], vec![]]).unwrap();
        assert_eq!(empty.to_dense(), Array2::<f64>::eye(3));

        let g = path3();
        let full: Vec<Vec<usize>> = (0..3).map(|u| g.neighbors(u).to_vec()).collect();
        assert_eq!(
            normalize_sampled_adjacency(3, &full).unwrap(),
            normalize_adjacency(&g)
        );

        // only node 0 sampled node 1; symmetrization adds (1, 0)
        let partial = normalize_sampled_adjacency(3, &[vec![1], vec![], vec![]]).unwrap();
        assert!((partial.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((partial.get(0, 1) - 0.5).abs() < 1e-15);
        assert!((partial.get(1, 0) - 0.5).abs() < 1e-15);
        assert!((partial.get(1, 1) - 0.5).abs() < 1e-15);
        assert_eq!(partial.get(2, 2), 1.0);
        assert_eq!(partial.get(1, 2), 0.0);

        assert!(normalize_sampled_adjacency(3, &[vec![7], vec![], vec![]]).is_err());
    }

    #[test]
    fn two_hop_examples() {
        let star = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(star.two_hop_neighbors(0).is_empty());
        assert_eq!(path3().two_hop_neighbors(0), vec![2]);
        let c5 = Graph::from_edges(5, (0..5).map(|i| (i, (i + 1) % 5))).unwrap();
        assert_eq!(c5.two_hop_neighbors(0), vec![2, 3]);
    }

    #[test]
    fn threshold_examples() {
        let f = AffiliationMatrix::new(ndarray::arr2(&[[0.6, 0.1], [0.4, 0.9]])).unwrap();
        let c = f.threshold(0.5).unwrap();
        assert_eq!(c.communities(), &[vec![0], vec![1]]);
        assert!(f.threshold(0.95).unwrap().is_empty());
        let flat = AffiliationMatrix::new(Array2::from_elem((3, 2), 0.05)).unwrap();
        let all = flat.threshold(0.05).unwrap();
        assert_eq!(all.communities(), &[vec![0, 1, 2], vec![0, 1, 2]]);
        assert!(f.threshold(0.0).is_err());
        assert!(AffiliationMatrix::new(ndarray::arr2(&[[-0.1]])).is_err());
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(1.0), "1");
        assert_eq!(format_sig6(0.123456789), "0.123457");
        assert_eq!(format_sig6(123456.7), "123457");
        assert_eq!(format_sig6(1234567.0), "1.23457e+06");
        assert_eq!(format_sig6(0.00001234), "1.234e-05");
        assert_eq!(format_sig6(2.5), "2.5");
    }
}
