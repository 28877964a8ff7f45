mod common;

use betatree::spectrum::{principal_eigenvalue, truncated_eigenvalue};
use betatree::BetaWeight;

#[test]
fn bisection_matches_dense_level_matrix() {
    for beta in [0.1, 0.25, 0.4] {
        let bw = BetaWeight::new(beta).unwrap();
        for depth in [10, 50, 200] {
            let got = principal_eigenvalue(&bw, depth, 1e-12).unwrap().lambda1;
            let want = common::level_oracle(beta, depth);
            assert!((got - want).abs() <= 1e-8, "beta={beta} L={depth}: {got} vs {want}");
        }
    }
}

#[test]
fn bisection_matches_full_binary_tree() {
    let bw = BetaWeight::new(0.25).unwrap();
    let got = principal_eigenvalue(&bw, 10, 1e-12).unwrap().lambda1;
    let want = common::tree_oracle(2, 0.25, 10);
    assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
}

#[test]
fn branching_number_does_not_matter() {
    let level = common::level_oracle(0.3, 5);
    for m in 2..=4 {
        let tree = common::tree_oracle(m, 0.3, 5);
        assert!((tree - level).abs() <= 1e-10, "m={m}: {tree} vs {level}");
    }
}

#[test]
fn symmetric_walk_has_cosine_eigenvalue() {
    let bw = BetaWeight::new(0.5).unwrap();
    for depth in [1usize, 5, 20, 100] {
        let want = 1.0 - (std::f64::consts::PI / (2.0 * (depth as f64 + 1.0))).cos();
        let got = truncated_eigenvalue(&bw, depth, 1e-14).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.max(1e-3), "L={depth}: {got} vs {want}");
        let dense = common::level_oracle(0.5, depth);
        assert!((dense - want).abs() <= 1e-10, "L={depth}: dense {dense} vs {want}");
    }
}

#[test]
fn supercritical_dense_agrees_with_bisection() {
    let bw = BetaWeight::new(0.7).unwrap();
    for depth in [5usize, 20, 60] {
        let got = truncated_eigenvalue(&bw, depth, 1e-13).unwrap();
        let want = common::level_oracle(0.7, depth);
        assert!((got - want).abs() <= 1e-10 * want.max(1e-6), "L={depth}: {got} vs {want}");
    }
}
