//! The β-Laplacian on truncated trees and on level-constant functions.
//!
//! For `x ≠ ∅` the operator is `(β u(x̂) + (1-β)/m Σ_i u(x,i) - u(x)) p^{-|x|}`
//! and at the root it is `(1/m) Σ_i u(∅,i) - u(∅)`. Children of level-`L`
//! nodes are ghosts that read as zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::TruncatedTree;

/// The parameter β together with the weight ratio `p = β / (1 - β)` (`p = 1` at β = 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaWeight {
    beta: f64,
    p: f64,
}

impl BetaWeight {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::Domain(format!("beta must lie in [0, 1), got {beta}")));
        }
        let p = if beta == 0.0 { 1.0 } else { beta / (1.0 - beta) };
        Ok(Self { beta, p })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Largest depth `L` for which `p^{-L}` and `p^{L}` are both finite.
    pub fn max_depth(&self) -> usize {
        let log_p = self.p.ln().abs();
        if log_p == 0.0 {
            return usize::MAX;
        }
        let mut depth = (f64::MAX.ln() / log_p).floor() as usize;
        // ln rounding can be off by one in either direction.
        while depth > 0 && !level_scale_finite(self.p, depth) {
            depth -= 1;
        }
        while level_scale_finite(self.p, depth + 1) {
            depth += 1;
        }
        depth
    }

    pub fn check_depth(&self, depth: usize) -> Result<()> {
        if level_scale_finite(self.p, depth) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "p^-L overflows for beta = {}, L = {depth} (largest admissible depth is {})",
                self.beta,
                self.max_depth()
            )))
        }
    }

    /// `p^{-k}` for `k = 0..=depth`, the per-level scaling of the operator.
    pub fn inverse_powers(&self, depth: usize) -> Result<Vec<f64>> {
        self.check_depth(depth)?;
        Ok((0..=depth).map(|k| self.p.powi(-(k as i32))).collect())
    }

    /// `p^{k}` for `k = 0..=depth`.
    pub fn powers(&self, depth: usize) -> Result<Vec<f64>> {
        self.check_depth(depth)?;
        Ok((0..=depth).map(|k| self.p.powi(k as i32)).collect())
    }
}

fn level_scale_finite(p: f64, depth: usize) -> bool {
    let Ok(k) = i32::try_from(depth) else {
        return false;
    };
    let inv = p.powi(-k);
    let fwd = p.powi(k);
    inv.is_finite() && fwd.is_finite() && inv > 0.0 && (p >= 1.0 || fwd > 0.0)
}

/// A function that depends only on the level: values `u_0, …, u_L`, with `u_{L+1} = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFunction {
    values: Vec<f64>,
}

impl LevelFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Shape("a level function needs at least the root level".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("level {i} has non-finite value {}", values[i])));
        }
        Ok(Self { values })
    }

    pub fn zeros(depth: usize) -> Self {
        Self { values: vec![0.0; depth + 1] }
    }

    pub fn depth(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at level `k`, reading the ghost level and beyond as zero.
    pub fn get(&self, k: usize) -> f64 {
        self.values.get(k).copied().unwrap_or(0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// Copies the level values onto every node of `tree`.
    pub fn to_tree(&self, tree: &TruncatedTree) -> Result<TreeFunction> {
        if tree.depth() != self.depth() {
            return Err(Error::Shape(format!(
                "level function depth {} does not match tree depth {}",
                self.depth(),
                tree.depth()
            )));
        }
        let mut values = Vec::with_capacity(tree.node_count());
        for (k, &v) in self.values.iter().enumerate() {
            values.extend(std::iter::repeat(v).take(tree.level_range(k).len()));
        }
        Ok(TreeFunction { tree: tree.clone(), values })
    }
}

/// One real value per node of a truncated tree.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeFunction {
    tree: TruncatedTree,
    values: Vec<f64>,
}

impl TreeFunction {
    pub fn new(tree: &TruncatedTree, values: Vec<f64>) -> Result<Self> {
        if values.len() != tree.node_count() {
            return Err(Error::Shape(format!(
                "{} values for a tree with {} nodes",
                values.len(),
                tree.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("node {i} has non-finite value {}", values[i])));
        }
        Ok(Self { tree: tree.clone(), values })
    }

    pub fn zeros(tree: &TruncatedTree) -> Self {
        Self { tree: tree.clone(), values: vec![0.0; tree.node_count()] }
    }

    pub fn from_fn(tree: &TruncatedTree, mut f: impl FnMut(usize) -> f64) -> Result<Self> {
        let values = (0..tree.node_count()).map(&mut f).collect();
        Self::new(tree, values)
    }

    pub fn tree(&self) -> &TruncatedTree {
        &self.tree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// The level values if the function is exactly constant on every level.
    pub fn as_level_constant(&self) -> Option<LevelFunction> {
        let mut values = Vec::with_capacity(self.tree.depth() + 1);
        for k in 0..=self.tree.depth() {
            let level = &self.values[self.tree.level_range(k)];
            let first = level[0];
            if level.iter().any(|&v| v != first) {
                return None;
            }
            values.push(first);
        }
        Some(LevelFunction { values })
    }
}

pub(crate) fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Functions the β-Laplacian can act on.
pub trait LevelGraded {
    fn values(&self) -> &[f64];
    fn depth(&self) -> usize;
    /// Level of the entry at position `i` of `values()`.
    fn level_of(&self, i: usize) -> usize;
    fn laplacian(&self, bw: &BetaWeight) -> Result<Self>
    where
        Self: Sized;
}

impl LevelGraded for LevelFunction {
    fn values(&self) -> &[f64] {
        &self.values
    }
    fn depth(&self) -> usize {
        self.depth()
    }
    fn level_of(&self, i: usize) -> usize {
        i
    }
    fn laplacian(&self, bw: &BetaWeight) -> Result<Self> {
        apply_laplacian_level(bw, self)
    }
}

impl LevelGraded for TreeFunction {
    fn values(&self) -> &[f64] {
        &self.values
    }
    fn depth(&self) -> usize {
        self.tree.depth()
    }
    fn level_of(&self, i: usize) -> usize {
        self.tree.level_of(i)
    }
    fn laplacian(&self, bw: &BetaWeight) -> Result<Self> {
        apply_laplacian_tree(bw, self)
    }
}

/// `Δ_β u` on every node of the truncated tree.
pub fn apply_laplacian_tree(bw: &BetaWeight, u: &TreeFunction) -> Result<TreeFunction> {
    let tree = &u.tree;
    let inv_p = bw.inverse_powers(tree.depth())?;
    let mut out = vec![0.0; tree.node_count()];
    laplacian_tree_into(tree, bw, &inv_p, &u.values, &mut out);
    Ok(TreeFunction { tree: tree.clone(), values: out })
}

pub(crate) fn laplacian_tree_into(
    tree: &TruncatedTree,
    bw: &BetaWeight,
    inv_p: &[f64],
    u: &[f64],
    out: &mut [f64],
) {
    let m = tree.m();
    let beta = bw.beta();
    let child_weight = (1.0 - beta) / m as f64;
    for k in 0..=tree.depth() {
        for i in tree.level_range(k) {
            let child_sum = if k < tree.depth() {
                let first = m * i + 1;
                u[first..first + m].iter().sum::<f64>()
            } else {
                0.0
            };
            out[i] = if k == 0 {
                child_sum / m as f64 - u[0]
            } else {
                (beta * u[(i - 1) / m] + child_weight * child_sum - u[i]) * inv_p[k]
            };
        }
    }
}

/// `Δ_β u` for a level-constant `u`; never reads `m`.
pub fn apply_laplacian_level(bw: &BetaWeight, u: &LevelFunction) -> Result<LevelFunction> {
    let inv_p = bw.inverse_powers(u.depth())?;
    let mut out = vec![0.0; u.values.len()];
    laplacian_level_into(bw, &inv_p, &u.values, &mut out);
    Ok(LevelFunction { values: out })
}

pub(crate) fn laplacian_level_into(bw: &BetaWeight, inv_p: &[f64], u: &[f64], out: &mut [f64]) {
    let beta = bw.beta();
    let at = |k: usize| u.get(k).copied().unwrap_or(0.0);
    out[0] = at(1) - u[0];
    for k in 1..u.len() {
        out[k] = (beta * u[k - 1] + (1.0 - beta) * at(k + 1) - u[k]) * inv_p[k];
    }
}

/// `ū_k = m^{-k} Σ_{|y| = k} u(y)`.
pub fn level_average(u: &TreeFunction) -> LevelFunction {
    let tree = &u.tree;
    let values = (0..=tree.depth())
        .map(|k| {
            let range = tree.level_range(k);
            let n = range.len() as f64;
            u.values[range].iter().sum::<f64>() / n
        })
        .collect();
    LevelFunction { values }
}

/// Sup-norm of `Δ_β u + λ u`, split into the interior levels and the last level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    /// Max over levels `0..L-1`.
    pub interior: f64,
    /// Max over level `L`, whose children are ghosts.
    pub last_level: f64,
}

pub fn residual_sup<F: LevelGraded>(bw: &BetaWeight, lambda: f64, u: &F) -> Result<Residual> {
    if !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda must be finite, got {lambda}")));
    }
    let lap = u.laplacian(bw)?;
    let depth = u.depth();
    let mut res = Residual { interior: 0.0, last_level: 0.0 };
    for (i, (&l, &v)) in lap.values().iter().zip(u.values()).enumerate() {
        let r = (l + lambda * v).abs();
        if u.level_of(i) < depth {
            res.interior = res.interior.max(r);
        } else {
            res.last_level = res.last_level.max(r);
        }
    }
    Ok(res)
}
