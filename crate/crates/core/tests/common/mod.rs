//! Independent reference computations built directly from the operator's
//! definition with dense linear algebra.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};

fn p_of(beta: f64) -> f64 {
    if beta == 0.0 {
        1.0
    } else {
        beta / (1.0 - beta)
    }
}

/// Smallest `λ` of `K w = λ P w`, where `P = diag(p^{|x|})`, `K` is the
/// symmetrised negative of the unscaled operator, and `w` is `u` after a
/// diagonal similarity.
///
/// For `p ≤ 1` this is `1 / μ_max(P^{1/2} K^{-1} P^{1/2})` by power iteration,
/// which stays well conditioned however small `p^L` gets. For `p > 1`, `K` itself
/// is exponentially ill conditioned, so the smallest eigenvalue of
/// `P^{-1/2} K P^{-1/2}` (entries bounded by 1) is computed densely instead.
fn smallest_generalized(k: &DMatrix<f64>, level: &[usize], p: f64) -> f64 {
    let n = level.len();
    if p > 1.0 {
        let s: Vec<f64> = level.iter().map(|&l| p.powi(-(l as i32)).sqrt()).collect();
        let a = DMatrix::from_fn(n, n, |i, j| s[i] * k[(i, j)] * s[j]);
        return SymmetricEigen::new(a).eigenvalues.min();
    }
    let chol = k.clone().cholesky().expect("K is positive definite");
    let half = DVector::from_iterator(n, level.iter().map(|&l| p.powi(l as i32).sqrt()));
    // The top eigenvector is positive; power iteration with Rayleigh quotients.
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut mu = 0.0;
    for _ in 0..20_000 {
        let w = chol.solve(&v.component_mul(&half)).component_mul(&half);
        let next_mu = v.dot(&w);
        v = &w / w.norm();
        let done = (next_mu - mu).abs() <= 1e-16 * next_mu;
        mu = next_mu;
        if done {
            break;
        }
    }
    1.0 / mu
}

/// Dense principal eigenvalue of the level chain `0..=depth` with a zero ghost level.
pub fn level_oracle(beta: f64, depth: usize) -> f64 {
    let n = depth + 1;
    let mut k = DMatrix::<f64>::identity(n, n);
    for i in 0..depth {
        // Up-weight from i to i+1, down-weight from i+1 to i.
        let up = if i == 0 { 1.0 } else { 1.0 - beta };
        let off = (up * beta).sqrt();
        k[(i, i + 1)] = -off;
        k[(i + 1, i)] = -off;
    }
    let level: Vec<usize> = (0..n).collect();
    smallest_generalized(&k, &level, p_of(beta))
}

/// Principal eigenvalue of `-Δ_β` on the full `m`-ary tree of depth `depth`,
/// built node by node from parent/child links.
pub fn tree_oracle(m: usize, beta: f64, depth: usize) -> f64 {
    // Breadth-first numbering, built by explicit expansion.
    let mut level = vec![0usize];
    let mut parent = vec![usize::MAX];
    let mut frontier = vec![0usize];
    for l in 1..=depth {
        let mut next = Vec::new();
        for &x in &frontier {
            for _ in 0..m {
                level.push(l);
                parent.push(x);
                next.push(level.len() - 1);
            }
        }
        frontier = next;
    }
    let n = level.len();
    let mut k = DMatrix::<f64>::identity(n, n);
    for c in 1..n {
        let x = parent[c];
        let down = if x == 0 { 1.0 / m as f64 } else { (1.0 - beta) / m as f64 };
        let off = (down * beta).sqrt();
        k[(x, c)] = -off;
        k[(c, x)] = -off;
    }
    smallest_generalized(&k, &level, p_of(beta))
}
