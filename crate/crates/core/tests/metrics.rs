mod common;

use dynares_core::metrics::{
    clustering_coefficient, conductance, coverage, density, evaluate, mean_and_sd, overlap_heatmap_matrix,
    overlapping_nmi, t_critical, t_test, t_test_from_samples,
};
use dynares_core::{AffiliationMatrix, Cover, Error, Graph};
use ndarray::{arr2, Array2};
use rand::Rng;

fn path3() -> Graph {
    Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
}

fn cover(n: usize, sets: &[&[usize]]) -> Cover {
    Cover::new(n, sets.iter().map(|s| s.to_vec()).collect()).unwrap()
}

#[test]
fn conductance_examples() {
    let g = path3();
    assert_eq!(conductance(&g, &cover(3, &[&[0, 1, 2]])).unwrap(), 0.0);
    assert_eq!(conductance(&g, &cover(3, &[&[0, 1]])).unwrap(), 1.0 / 3.0);
    let weighted = conductance(&g, &cover(3, &[&[0, 1], &[2]])).unwrap();
    assert!((weighted - 5.0 / 9.0).abs() < 1e-15);
}

#[test]
fn coverage_examples() {
    let g = path3();
    assert_eq!(coverage(&g, &cover(3, &[&[0, 1, 2]])).unwrap(), 1.0);
    assert_eq!(coverage(&g, &cover(3, &[])).unwrap(), 0.0);
    assert_eq!(coverage(&g, &cover(3, &[&[0, 1]])).unwrap(), 0.5);
    let edgeless = Graph::from_edges(2, []).unwrap();
    assert!(matches!(coverage(&edgeless, &cover(2, &[&[0]])), Err(Error::EmptyEdgeSet)));
}

#[test]
fn density_examples() {
    let g = Graph::from_edges(5, [(0, 1), (1, 2), (0, 2)]).unwrap();
    assert_eq!(density(&g, &cover(5, &[&[0, 1, 2]])).unwrap(), 1.0);
    let one_edge = Graph::from_edges(3, [(0, 1)]).unwrap();
    assert!((density(&one_edge, &cover(3, &[&[0, 1, 2]])).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    let mixed = density(&g, &cover(5, &[&[0, 1, 2], &[3, 4]])).unwrap();
    assert!((mixed - 0.6).abs() < 1e-15);
}

#[test]
fn clustering_examples() {
    let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    assert_eq!(clustering_coefficient(&tri, &cover(3, &[&[0, 1, 2]])).unwrap(), 1.0);
    assert_eq!(clustering_coefficient(&path3(), &cover(3, &[&[0, 1, 2]])).unwrap(), 0.0);
    let k4_minus = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
    assert_eq!(clustering_coefficient(&k4_minus, &cover(4, &[&[0, 1, 2, 3]])).unwrap(), 0.5);
}

#[test]
fn empty_cover_is_rejected() {
    assert!(matches!(evaluate(&path3(), &cover(3, &[]), None), Err(Error::EmptyCover)));
}

#[test]
fn metrics_agree_with_counting_oracle() {
    let mut rng = common::rng(41);
    let mut done = 0;
    while done < 300 {
        let n = rng.random_range(2..=12);
        let g = common::random_graph(&mut rng, n, 0.5);
        let k = rng.random_range(1..=5);
        let c = common::random_cover(&mut rng, n, k, 0.4);
        if g.num_edges() == 0 || c.is_empty() {
            continue;
        }
        let got = evaluate(&g, &c, None).unwrap();
        let want = common::counted_metrics(&g, &c);
        assert_eq!(got.conductance, want.conductance);
        assert_eq!(got.coverage, want.coverage);
        assert_eq!(got.density, want.density);
        assert_eq!(got.clustering_coefficient, want.clustering_coefficient);
        for v in [got.conductance, got.coverage, got.density, got.clustering_coefficient] {
            assert!((0.0..=1.0).contains(&v));
        }
        done += 1;
    }
}

#[test]
fn nmi_is_symmetric_and_bounded() {
    let mut rng = common::rng(42);
    for _ in 0..100 {
        let n = rng.random_range(4..=50);
        let a = common::random_cover(&mut rng, n, 3, 0.4);
        let b = common::random_cover(&mut rng, n, 4, 0.3);
        if a.is_empty() || b.is_empty() {
            continue;
        }
        let ab = overlapping_nmi(&a, &b).unwrap();
        let ba = overlapping_nmi(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-9);
        assert!((0.0..=1.0 + 1e-12).contains(&ab));
        assert!((overlapping_nmi(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn nmi_ranks_a_near_copy_above_noise() {
    let truth = cover(40, &[&(0..20).collect::<Vec<_>>(), &(15..40).collect::<Vec<_>>()]);
    let near = cover(40, &[&(0..19).collect::<Vec<_>>(), &(15..40).collect::<Vec<_>>()]);
    let mut rng = common::rng(43);
    let noise = common::random_cover(&mut rng, 40, 2, 0.5);
    let close = overlapping_nmi(&near, &truth).unwrap();
    assert!(close > 0.8);
    assert!(close > overlapping_nmi(&noise, &truth).unwrap());
}

#[test]
fn heatmap_of_nine_nodes() {
    let mut rng = common::rng(44);
    let f = AffiliationMatrix::new(Array2::from_shape_fn((30, 6), |_| rng.random_range(0.0..1.0))).unwrap();
    let nodes: Vec<usize> = (0..9).map(|i| i * 3).collect();
    let h = overlap_heatmap_matrix(&f, &nodes, 0.3).unwrap();
    assert_eq!(h.matrix.dim(), (9, 9));
    assert_eq!(h.communities.len(), 9);
    let max = h.matrix.iter().cloned().fold(0.0, f64::max);
    assert_eq!(max, 1.0);
    for i in 0..9 {
        for j in 0..9 {
            assert_eq!(h.matrix[[i, j]], h.matrix[[j, i]]);
            assert!(h.matrix[[i, j]] >= 0.0);
        }
    }
}

#[test]
fn heatmap_shared_and_disjoint_communities() {
    let f = AffiliationMatrix::new(arr2(&[[0.9, 0.0], [0.8, 0.1], [0.0, 0.7], [0.1, 0.9]])).unwrap();
    let same = overlap_heatmap_matrix(&f, &[0, 1], 0.5).unwrap();
    assert!(same.matrix.iter().all(|&v| v == 1.0));
    let apart = overlap_heatmap_matrix(&f, &[0, 2], 0.5).unwrap();
    assert_eq!(apart.matrix[[0, 1]], 0.0);
    let single = overlap_heatmap_matrix(&f, &[3], 0.5).unwrap();
    assert_eq!(single.matrix.dim(), (1, 1));
    let zero_row = AffiliationMatrix::new(arr2(&[[0.0, 0.0], [1.0, 0.0]])).unwrap();
    assert!(overlap_heatmap_matrix(&zero_row, &[0], 0.5).is_err());
}

#[test]
fn t_test_examples() {
    let r = t_test(1.0, 1.0, 50, 0.0, 1.0, 50).unwrap();
    assert!((r.t - 5.0).abs() < 1e-9);
    assert!(r.significant);
    let flat = t_test(2.0, 0.0, 10, 2.0, 0.0, 10).unwrap();
    assert_eq!(flat.t, 0.0);
    assert!(!flat.significant);
    assert!(t_test(1.0, 1.0, 1, 0.0, 1.0, 5).is_err());
}

#[test]
fn t_test_is_antisymmetric() {
    let mut rng = common::rng(45);
    for _ in 0..50 {
        let (m1, m2) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (s1, s2) = (rng.random_range(0.01..2.0), rng.random_range(0.01..2.0));
        let (n1, n2) = (rng.random_range(2..60), rng.random_range(2..60));
        let a = t_test(m1, s1, n1, m2, s2, n2).unwrap();
        let b = t_test(m2, s2, n2, m1, s1, n1).unwrap();
        assert_eq!(a.t, -b.t);
        assert_eq!(a.significant, b.significant);
        assert_eq!(a.df, n1.min(n2) - 1);
    }
}

#[test]
fn critical_values_match_quadrature() {
    for df in [1usize, 2, 5, 10, 30, 49, 100] {
        let oracle = common::t_quantile_by_quadrature(df as f64, 0.05);
        let got = t_critical(df, 0.05).unwrap();
        assert!((got - oracle).abs() < 1e-3 * oracle.max(1.0), "df {df}: {got} vs {oracle}");
    }
}

#[test]
fn samples_reduce_to_summary_statistics() {
    let a = [0.61, 0.58, 0.66, 0.70, 0.59];
    let b = [0.41, 0.48, 0.39, 0.52, 0.45];
    let (ma, sa) = mean_and_sd(&a);
    let (mb, sb) = mean_and_sd(&b);
    let direct = t_test(ma, sa, 5, mb, sb, 5).unwrap();
    assert_eq!(t_test_from_samples(&a, &b).unwrap(), direct);
    let var: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / 4.0;
    assert!((sa - var.sqrt()).abs() < 1e-15);
}
