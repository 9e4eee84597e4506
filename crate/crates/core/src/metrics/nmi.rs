//! Overlapping NMI in the best-match conditional-entropy formulation, with
//! the mutual information normalized by `max(H(X), H(Y))`.

use crate::error::{Error, Result};
use crate::graph::Cover;

fn h(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

fn community_entropy(size: usize, n: f64) -> f64 {
    let p = size as f64 / n;
    h(p) + h(1.0 - p)
}

/// `Σ_k min_l H(X_k | Y_l)`, where a candidate `Y_l` is only admissible when
/// `h(a) + h(d) ≥ h(b) + h(c)`; otherwise `H(X_k)` is used.
fn conditional_entropy(x: &[&[usize]], y: &[&[usize]], n: f64) -> f64 {
    x.iter()
        .map(|xk| {
            let hx = community_entropy(xk.len(), n);
            y.iter()
                .filter_map(|yl| {
                    let both = intersection_size(xk, yl) as f64;
                    let only_x = xk.len() as f64 - both;
                    let only_y = yl.len() as f64 - both;
                    let neither = n - both - only_x - only_y;
                    let (a, b, c, d) = (neither / n, only_y / n, only_x / n, both / n);
                    if h(a) + h(d) >= h(b) + h(c) {
                        Some(h(a) + h(b) + h(c) + h(d) - h(b + d) - h(a + c))
                    } else {
                        None
                    }
                })
                .fold(hx, f64::min)
        })
        .sum()
}

/// Similarity of two covers over the same node set, in `[0, 1]`.
pub fn overlapping_nmi(a: &Cover, b: &Cover) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::InvalidInput(format!(
            "covers span {} and {} nodes",
            a.n(),
            b.n()
        )));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCover);
    }
    let n = a.n() as f64;
    let x: Vec<&[usize]> = a.sets().collect();
    let y: Vec<&[usize]> = b.sets().collect();
    let hx: f64 = x.iter().map(|c| community_entropy(c.len(), n)).sum();
    let hy: f64 = y.iter().map(|c| community_entropy(c.len(), n)).sum();
    let denom = hx.max(hy);
    if denom == 0.0 {
        // only all-node communities on both sides
        return Ok(1.0);
    }
    let mutual = 0.5 * (hx - conditional_entropy(&x, &y, n) + hy - conditional_entropy(&y, &x, n));
    Ok((mutual / denom).clamp(0.0, 1.0))
}
