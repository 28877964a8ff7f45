//! Index arithmetic on the regular `m`-branching tree truncated at depth `L`.
//!
//! Nodes are finite digit paths from the root. A truncated tree numbers the
//! nodes of level `0..=L` breadth-first with digits ascending, so node `i` has
//! parent `(i - 1) / m` and children `m * i + 1 ..= m * i + m`. The boundary
//! of the infinite tree is modelled by a ghost level `L + 1` on which every
//! function vanishes; it is never stored.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Refuse to allocate trees with more nodes than this.
pub const MAX_NODES: usize = 1 << 26;

/// A vertex of the tree, written as the digit path from the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    path: Vec<u32>,
}

impl NodeId {
    pub fn root() -> Self {
        Self { path: Vec::new() }
    }

    /// Builds a node from its digits, checking each one against `m`.
    pub fn new(path: Vec<u32>, m: usize) -> Result<Self> {
        if let Some(&d) = path.iter().find(|&&d| d as usize >= m) {
            return Err(Error::Domain(format!("digit {d} is not below m = {m}")));
        }
        Ok(Self { path })
    }

    pub fn digits(&self) -> &[u32] {
        &self.path
    }

    pub fn level(&self) -> usize {
        self.path.len()
    }

    pub fn is_root(&self) -> bool {
        self.path.is_empty()
    }

    /// The immediate predecessor. The root has none.
    pub fn parent(&self) -> Result<NodeId> {
        match self.path.split_last() {
            Some((_, head)) => Ok(NodeId { path: head.to_vec() }),
            None => Err(Error::Domain("the root has no predecessor".into())),
        }
    }

    /// The `m` successors `(x, 0), …, (x, m - 1)` in ascending digit order.
    pub fn children(&self, m: usize) -> Vec<NodeId> {
        (0..m as u32)
            .map(|i| {
                let mut path = Vec::with_capacity(self.path.len() + 1);
                path.extend_from_slice(&self.path);
                path.push(i);
                NodeId { path }
            })
            .collect()
    }

    /// `ψ(x) = Σ_k a_k / m^k` as an exact fraction.
    pub fn psi_exact(&self, m: usize) -> BigRational {
        let base = BigInt::from(m);
        let mut numer = BigInt::zero();
        let mut denom = BigInt::from(1u32);
        for &d in &self.path {
            numer = numer * &base + BigInt::from(d);
            denom *= &base;
        }
        BigRational::new(numer, denom)
    }

    /// Boundary coordinate in `[0, 1]`, rounded once from the exact fraction.
    pub fn psi(&self, m: usize) -> f64 {
        self.psi_exact(m).to_f64().unwrap_or(f64::NAN)
    }

    /// Parses the dot-separated path text format; the empty string is the root.
    pub fn parse(text: &str, m: usize) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Self::root());
        }
        let path = text
            .split('.')
            .map(|tok| {
                tok.parse::<u32>().map_err(|e| Error::Parse {
                    what: "node path",
                    detail: format!("{text:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(path, m)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.path.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// The first `L + 1` levels of the `m`-branching tree with a fixed numbering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedTree {
    m: usize,
    depth: usize,
    /// `offsets[k]` is the index of the first node of level `k`; `offsets[L + 1] = N`.
    offsets: Vec<usize>,
}

impl TruncatedTree {
    pub fn new(m: usize, depth: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("branching factor must be at least 2, got {m}")));
        }
        let mut offsets = Vec::with_capacity(depth + 2);
        let mut start = 0usize;
        let mut width = 1usize;
        offsets.push(0);
        for _ in 0..=depth {
            start = start
                .checked_add(width)
                .filter(|&n| n <= MAX_NODES)
                .ok_or_else(|| {
                    Error::Config(format!("tree m = {m}, L = {depth} exceeds {MAX_NODES} nodes"))
                })?;
            offsets.push(start);
            width = width.saturating_mul(m);
        }
        Ok(Self { m, depth, offsets })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.offsets[self.depth + 1]
    }

    /// Index range of the nodes on level `k`.
    pub fn level_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn level_of(&self, index: usize) -> usize {
        // offsets is sorted; the level is the last offset not exceeding index.
        self.offsets.partition_point(|&o| o <= index) - 1
    }

    pub fn parent_index(&self, index: usize) -> Option<usize> {
        (index > 0).then(|| (index - 1) / self.m)
    }

    /// Child indices of `index`, empty on level `L` (the children are ghosts).
    pub fn child_indices(&self, index: usize) -> std::ops::Range<usize> {
        if self.level_of(index) >= self.depth {
            return 0..0;
        }
        let first = self.m * index + 1;
        first..first + self.m
    }

    pub fn node_index(&self, node: &NodeId) -> Result<usize> {
        if node.level() > self.depth {
            return Err(Error::Bounds(format!(
                "node {node:?} has level {} > depth {}",
                node.level(),
                self.depth
            )));
        }
        let mut rank = 0usize;
        for &d in node.digits() {
            if d as usize >= self.m {
                return Err(Error::Bounds(format!("digit {d} is not below m = {}", self.m)));
            }
            rank = rank * self.m + d as usize;
        }
        Ok(self.offsets[node.level()] + rank)
    }

    pub fn index_node(&self, index: usize) -> Result<NodeId> {
        if index >= self.node_count() {
            return Err(Error::Bounds(format!(
                "index {index} >= node count {}",
                self.node_count()
            )));
        }
        let level = self.level_of(index);
        let mut rank = index - self.offsets[level];
        let mut path = vec![0u32; level];
        for slot in path.iter_mut().rev() {
            *slot = (rank % self.m) as u32;
            rank /= self.m;
        }
        Ok(NodeId { path })
    }

    /// All nodes in index order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).map(|i| self.index_node(i).expect("index in range"))
    }
}
