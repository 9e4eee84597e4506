use std::io::Write;

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::AffiliationMatrix;

/// Normalized overlap between the strongest communities of a list of nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub nodes: Vec<usize>,
    /// Strongest community of each listed node.
    pub communities: Vec<usize>,
    /// Member overlap counts divided by the largest count. All zeros when no
    /// selected community has a member at the threshold.
    pub matrix: Array2<f64>,
}

impl Heatmap {
    /// CSV with header `node,community,k<c>...` and one row per listed node.
    pub fn write_csv<W: Write>(&self, node_ids: &[String], mut out: W) -> std::io::Result<()> {
        write!(out, "node,community")?;
        for c in &self.communities {
            write!(out, ",k{c}")?;
        }
        writeln!(out)?;
        for (i, (&u, &c)) in self.nodes.iter().zip(&self.communities).enumerate() {
            write!(out, "{},k{c}", node_ids[u])?;
            for v in self.matrix.row(i) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// For each listed node, picks `argmax_c F_uc` (ties to the lowest index),
/// counts shared members (`F ≥ τ`) between every pair of picked communities
/// and scales by the maximum count.
pub fn overlap_heatmap_matrix(f: &AffiliationMatrix, nodes: &[usize], tau: f64) -> Result<Heatmap> {
    let values = f.values();
    let cover = f.threshold(tau)?;
    let mut communities = Vec::with_capacity(nodes.len());
    for &u in nodes {
        if u >= f.n() {
            return Err(Error::InvalidInput(format!("node index {u} out of range")));
        }
        let row = values.row(u);
        let (best, &strength) = row
            .iter()
            .enumerate()
            .fold((0, &row[0]), |acc, (c, v)| if *v > *acc.1 { (c, v) } else { acc });
        if strength <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "node {:?} has an all-zero affiliation row",
                f.node_ids()[u]
            )));
        }
        communities.push(best);
    }
    let members = cover.communities();
    let q = nodes.len();
    let mut matrix = Array2::zeros((q, q));
    for i in 0..q {
        for j in i..q {
            let (a, b) = (&members[communities[i]], &members[communities[j]]);
            let shared = a.iter().filter(|u| b.binary_search(u).is_ok()).count() as f64;
            matrix[[i, j]] = shared;
            matrix[[j, i]] = shared;
        }
    }
    let max = matrix.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        matrix /= max;
    }
    Ok(Heatmap {
        nodes: nodes.to_vec(),
        communities,
        matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn shared_argmax_gives_all_ones() {
        let f = AffiliationMatrix::new(arr2(&[[0.9, 0.1], [0.8, 0.2], [0.7, 0.6]])).unwrap();
        let hm = overlap_heatmap_matrix(&f, &[0, 1, 2], 0.5).unwrap();
        assert_eq!(hm.communities, vec![0, 0, 0]);
        assert!(hm.matrix.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn disjoint_communities_have_zero_overlap() {
        let f = AffiliationMatrix::new(arr2(&[[0.9, 0.0], [0.0, 0.9], [0.8, 0.1]])).unwrap();
        let hm = overlap_heatmap_matrix(&f, &[0, 1], 0.5).unwrap();
        assert_eq!(hm.matrix[[0, 1]], 0.0);
        assert_eq!(hm.matrix[[1, 0]], 0.0);
        assert_eq!(hm.matrix[[0, 0]], 1.0);
        assert_eq!(hm.matrix[[1, 1]], 0.5);
    }

    #[test]
    fn ties_break_low_and_single_node_is_unit() {
        let f = AffiliationMatrix::new(arr2(&[[0.5, 0.5]])).unwrap();
        let hm = overlap_heatmap_matrix(&f, &[0], 0.5).unwrap();
        assert_eq!(hm.communities, vec![0]);
        assert_eq!(hm.matrix, arr2(&[[1.0]]));
    }

    #[test]
    fn rejects_zero_rows_and_bad_ids() {
        let f = AffiliationMatrix::new(arr2(&[[0.0, 0.0], [1.0, 0.0]])).unwrap();
        assert!(overlap_heatmap_matrix(&f, &[0], 0.5).is_err());
        assert!(overlap_heatmap_matrix(&f, &[5], 0.5).is_err());
    }

    #[test]
    fn nine_nodes_give_nine_by_nine() {
        let f = AffiliationMatrix::new(ndarray::Array2::from_shape_fn((12, 3), |(u, c)| {
            if u % 3 == c { 0.9 } else { 0.05 }
        }))
        .unwrap();
        let hm = overlap_heatmap_matrix(&f, &(0..9).collect::<Vec<_>>(), 0.5).unwrap();
        assert_eq!(hm.matrix.dim(), (9, 9));
        let mut buf = Vec::new();
        hm.write_csv(f.node_ids(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(text.starts_with("node,community,k0,k1,k2,k0"));
    }
}
