//! Randomized partition trees for defeatist nearest-neighbor search.
//!
//! Every internal node picks a uniformly random direction `U`, projects its
//! points onto it and splits at thresholds computed from those projections.
//! The three kinds differ only in which split routes data and which routes
//! queries:
//!
//! | kind          | data                 | queries              |
//! |---------------|----------------------|----------------------|
//! | RP tree       | perturbed split      | perturbed split      |
//! | spill tree    | overlapping split    | median split         |
//! | virtual spill | median split         | overlapping split    |
//!
//! A split "at fraction β" of a node with `m` points uses the threshold
//! that sends exactly `floor(β·m)` points to the left (`x·U < threshold`)
//! when projections are distinct. The perturbed split draws
//! `β ~ U[1/4, 3/4]`; the median split uses `β = 1/2`; the overlapping split
//! sends `x·U < r` left and `x·U >= l` right, with `r` and `l` at fractions
//! `1/2 + α` and `1/2 − α`.
//!
//! Queries are answered defeatist-style: no backtracking, just a scan of the
//! leaf (or leaves, for the virtual spill tree) the query is routed to.

mod format;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{split_threshold, squared_distance, RngSeed, UnitDirection};

pub use format::{read_tree, write_tree, FORMAT_VERSION, TREE_MAGIC};

/// Directions are redrawn this many times when a split fails to separate a
/// node (duplicate projections) before the node is kept as a leaf.
pub const MAX_SPLIT_REDRAWS: usize = 8;

/// Spill trees whose predicted number of stored indices exceeds this are
/// refused rather than built.
pub const MAX_SPILL_STORED: f64 = (1u64 << 27) as f64;

/// Nodes at least this large build their two subtrees in parallel.
const PARALLEL_SPLIT_SIZE: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeKind {
    Rp,
    Spill,
    VirtualSpill,
}

impl TreeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TreeKind::Rp => "rp",
            TreeKind::Spill => "spill",
            TreeKind::VirtualSpill => "virtual-spill",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            TreeKind::Rp => 0,
            TreeKind::Spill => 1,
            TreeKind::VirtualSpill => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(TreeKind::Rp),
            1 => Some(TreeKind::Spill),
            2 => Some(TreeKind::VirtualSpill),
            _ => None,
        }
    }
}

impl fmt::Display for TreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TreeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rp" => Ok(TreeKind::Rp),
            "spill" => Ok(TreeKind::Spill),
            "virtual-spill" | "virtual_spill" => Ok(TreeKind::VirtualSpill),
            other => Err(Error::param(format!("unknown tree kind {other:?}"))),
        }
    }
}

/// Split thresholds along a node's direction.
#[derive(Clone, Debug, PartialEq)]
pub enum Thresholds {
    /// RP tree: left iff `x·U < value`.
    Perturbed(f64),
    /// Spill-family: `low <= median <= high`. Either outer threshold may be
    /// infinite when its fractile count is 0 or `m`.
    Spill { low: f64, median: f64, high: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitRule {
    pub direction: UnitDirection,
    pub thresholds: Thresholds,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Internal(Box<InternalNode>),
    Leaf(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct InternalNode {
    pub rule: SplitRule,
    pub left: TreeNode,
    pub right: TreeNode,
}

/// A built tree. It references its dataset by shape only; queries take the
/// dataset as an argument and check that the shape matches.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionTree {
    kind: TreeKind,
    alpha: f64,
    leaf_capacity: usize,
    seed: u64,
    n: usize,
    dim: usize,
    root: TreeNode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub depth: usize,
    pub leaf_count: usize,
    pub stored_indices: usize,
    pub max_leaf_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    /// Row indices of the returned neighbors, nearest first.
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
    pub leaves_visited: usize,
    pub points_scanned: usize,
    /// Fewer than `k` candidates were reachable.
    pub short_count: bool,
}

pub fn build_rp_tree(data: &Dataset, leaf_capacity: usize, seed: u64) -> Result<PartitionTree> {
    PartitionTree::build(TreeKind::Rp, data, leaf_capacity, 0.0, seed)
}

pub fn build_spill_tree(
    data: &Dataset,
    leaf_capacity: usize,
    alpha: f64,
    seed: u64,
) -> Result<PartitionTree> {
    PartitionTree::build(TreeKind::Spill, data, leaf_capacity, alpha, seed)
}

pub fn build_virtual_spill_tree(
    data: &Dataset,
    leaf_capacity: usize,
    alpha: f64,
    seed: u64,
) -> Result<PartitionTree> {
    PartitionTree::build(TreeKind::VirtualSpill, data, leaf_capacity, alpha, seed)
}

struct Builder<'a> {
    data: &'a Dataset,
    kind: TreeKind,
    alpha: f64,
    leaf_capacity: usize,
}

impl PartitionTree {
    /// Builds a tree of the given kind. `alpha` is ignored for RP trees and
    /// must lie in `(0, 1/2)` otherwise.
    pub fn build(
        kind: TreeKind,
        data: &Dataset,
        leaf_capacity: usize,
        alpha: f64,
        seed: u64,
    ) -> Result<Self> {
        validate_params(kind, leaf_capacity, alpha)?;
        if kind == TreeKind::Spill {
            let predicted = predicted_spill_storage(data.len(), leaf_capacity, alpha);
            if predicted > MAX_SPILL_STORED {
                return Err(Error::param(format!(
                    "spill tree with alpha {alpha} over {} points would store about {predicted:.3e} indices",
                    data.len()
                )));
            }
        }
        let alpha = if kind == TreeKind::Rp { 0.0 } else { alpha };
        let builder = Builder {
            data,
            kind,
            alpha,
            leaf_capacity,
        };
        let root = builder.node((0..data.len()).collect(), RngSeed::new(seed))?;
        Ok(PartitionTree {
            kind,
            alpha,
            leaf_capacity,
            seed,
            n: data.len(),
            dim: data.dim(),
            root,
        })
    }

    pub(crate) fn from_parts(
        kind: TreeKind,
        alpha: f64,
        leaf_capacity: usize,
        seed: u64,
        n: usize,
        dim: usize,
        root: TreeNode,
    ) -> Self {
        PartitionTree {
            kind,
            alpha,
            leaf_capacity,
            seed,
            n,
            dim,
            root,
        }
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of points in the indexed dataset.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    /// Leaf contents in left-to-right order.
    pub fn leaves(&self) -> Vec<&[usize]> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Leaf(ix) => out.push(ix.as_slice()),
                TreeNode::Internal(inner) => {
                    stack.push(&inner.right);
                    stack.push(&inner.left);
                }
            }
        }
        out
    }

    pub fn stats(&self) -> TreeStats {
        let mut stats = TreeStats {
            depth: 0,
            leaf_count: 0,
            stored_indices: 0,
            max_leaf_size: 0,
        };
        let mut stack = vec![(&self.root, 0usize)];
        while let Some((node, depth)) = stack.pop() {
            match node {
                TreeNode::Leaf(ix) => {
                    stats.depth = stats.depth.max(depth);
                    stats.leaf_count += 1;
                    stats.stored_indices += ix.len();
                    stats.max_leaf_size = stats.max_leaf_size.max(ix.len());
                }
                TreeNode::Internal(inner) => {
                    stack.push((&inner.left, depth + 1));
                    stack.push((&inner.right, depth + 1));
                }
            }
        }
        stats
    }

    /// Defeatist `k`-NN query. `data` must be the dataset the tree was
    /// built on.
    pub fn query(&self, data: &Dataset, q: &[f64], k: usize) -> Result<QueryResult> {
        if k == 0 {
            return Err(Error::param("k must be >= 1"));
        }
        if data.len() != self.n || data.dim() != self.dim {
            return Err(Error::param(format!(
                "tree indexes {} points in R^{}, dataset has {} points in R^{}",
                self.n,
                self.dim,
                data.len(),
                data.dim()
            )));
        }
        data.check_query(q)?;
        let leaves = self.route(q);
        let mut candidates: Vec<(f64, usize)> = leaves
            .iter()
            .flat_map(|leaf| leaf.iter())
            .map(|&i| (squared_distance(data.point(i), q), i))
            .collect();
        let points_scanned = candidates.len();
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if candidates.len() > k {
            candidates.select_nth_unstable_by(k - 1, by_dist);
            candidates.truncate(k);
        }
        candidates.sort_unstable_by(by_dist);
        Ok(QueryResult {
            short_count: candidates.len() < k,
            indices: candidates.iter().map(|c| c.1).collect(),
            distances: candidates.iter().map(|c| c.0.sqrt()).collect(),
            leaves_visited: leaves.len(),
            points_scanned,
        })
    }

    /// The leaves a query is routed to.
    pub fn route(&self, q: &[f64]) -> Vec<&[usize]> {
        match self.kind {
            TreeKind::Rp | TreeKind::Spill => {
                let mut node = &self.root;
                loop {
                    match node {
                        TreeNode::Leaf(ix) => return vec![ix.as_slice()],
                        TreeNode::Internal(inner) => {
                            let p = inner.rule.direction.project_one(q);
                            let go_left = match inner.rule.thresholds {
                                Thresholds::Perturbed(v) => p < v,
                                Thresholds::Spill { median, .. } => p < median,
                            };
                            node = if go_left { &inner.left } else { &inner.right };
                        }
                    }
                }
            }
            TreeKind::VirtualSpill => {
                let mut out = Vec::new();
                let mut stack = vec![&self.root];
                while let Some(node) = stack.pop() {
                    match node {
                        TreeNode::Leaf(ix) => out.push(ix.as_slice()),
                        TreeNode::Internal(inner) => {
                            let p = inner.rule.direction.project_one(q);
                            let (low, high) = match inner.rule.thresholds {
                                Thresholds::Spill { low, high, .. } => (low, high),
                                Thresholds::Perturbed(v) => (v, v),
                            };
                            if p >= low {
                                stack.push(&inner.right);
                            }
                            if p < high {
                                stack.push(&inner.left);
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

fn validate_params(kind: TreeKind, leaf_capacity: usize, alpha: f64) -> Result<()> {
    if leaf_capacity == 0 {
        return Err(Error::param("leaf capacity n_o must be >= 1"));
    }
    if kind != TreeKind::Rp && !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::param(format!(
            "alpha must lie in (0, 1/2) for {kind} trees, got {alpha}"
        )));
    }
    Ok(())
}

/// Approximate stored-index count of a spill tree: each level multiplies
/// the storage by `2` while shrinking nodes by `1/2 + alpha`, so the total is
/// about `n_o (n / n_o)^(1 / log2(1 / (1/2 + alpha)))`.
pub fn predicted_spill_storage(n: usize, leaf_capacity: usize, alpha: f64) -> f64 {
    if n <= leaf_capacity {
        return n as f64;
    }
    let exponent = 1.0 / (1.0 / (0.5 + alpha)).log2();
    let n_o = leaf_capacity as f64;
    n_o * (n as f64 / n_o).powf(exponent)
}

/// `floor(beta * m)` computed robustly for the products that land exactly on
/// an integer.
fn fraction_count(beta: f64, m: usize) -> usize {
    let x = beta * m as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

impl Builder<'_> {
    fn node(&self, indices: Vec<usize>, seed: RngSeed) -> Result<TreeNode> {
        if indices.len() <= self.leaf_capacity {
            return Ok(TreeNode::Leaf(indices));
        }
        let Some((rule, left, right)) = self.split(&indices, &seed)? else {
            return Ok(TreeNode::Leaf(indices));
        };
        let (ls, rs) = (seed.child(0), seed.child(1));
        let (left, right) = if indices.len() >= PARALLEL_SPLIT_SIZE {
            rayon::join(|| self.node(left, ls), || self.node(right, rs))
        } else {
            (self.node(left, ls), self.node(right, rs))
        };
        Ok(TreeNode::Internal(Box::new(InternalNode {
            rule,
            left: left?,
            right: right?,
        })))
    }

    /// Chooses a split for a node, or `None` when every attempt is
    /// degenerate.
    #[allow(clippy::type_complexity)]
    fn split(
        &self,
        indices: &[usize],
        seed: &RngSeed,
    ) -> Result<Option<(SplitRule, Vec<usize>, Vec<usize>)>> {
        let m = indices.len();
        let mut rng = seed.rng();
        let mut proj = vec![0.0; m];
        let mut scratch = vec![0.0; m];
        for _ in 0..=MAX_SPLIT_REDRAWS {
            let direction = UnitDirection::sample(self.data.dim(), &mut rng)?;
            for (p, &i) in proj.iter_mut().zip(indices) {
                *p = direction.project_one(self.data.point(i));
            }
            let mut threshold_at = |beta: f64, lo: usize, hi: usize| {
                scratch.copy_from_slice(&proj);
                split_threshold(&mut scratch, fraction_count(beta, m).clamp(lo, hi))
            };
            let (thresholds, left, right) = match self.kind {
                TreeKind::Rp => {
                    let beta = rng.random_range(0.25..=0.75);
                    // At least one point on each side even for tiny nodes.
                    let v = threshold_at(beta, 1, m - 1);
                    let (l, r) = partition(indices, &proj, |p| p < v, |p| p >= v);
                    (Thresholds::Perturbed(v), l, r)
                }
                TreeKind::Spill | TreeKind::VirtualSpill => {
                    let median = threshold_at(0.5, 0, m);
                    let high = threshold_at(0.5 + self.alpha, 0, m);
                    let low = threshold_at(0.5 - self.alpha, 0, m);
                    let thresholds = Thresholds::Spill { low, median, high };
                    let (l, r) = if self.kind == TreeKind::Spill {
                        let (l, r) = partition(indices, &proj, |p| p < high, |p| p >= low);
                        if l.len() < m && r.len() < m {
                            (l, r)
                        } else {
                            // Overlap too wide to shrink this node: store by
                            // the median split instead.
                            partition(indices, &proj, |p| p < median, |p| p >= median)
                        }
                    } else {
                        partition(indices, &proj, |p| p < median, |p| p >= median)
                    };
                    (thresholds, l, r)
                }
            };
            if !left.is_empty() && !right.is_empty() && left.len() < m && right.len() < m {
                return Ok(Some((
                    SplitRule {
                        direction,
                        thresholds,
                    },
                    left,
                    right,
                )));
            }
        }
        Ok(None)
    }
}

fn partition(
    indices: &[usize],
    proj: &[f64],
    to_left: impl Fn(f64) -> bool,
    to_right: impl Fn(f64) -> bool,
) -> (Vec<usize>, Vec<usize>) {
    let mut left = Vec::with_capacity(indices.len() / 2 + 1);
    let mut right = Vec::with_capacity(indices.len() / 2 + 1);
    for (&i, &p) in indices.iter().zip(proj) {
        if to_left(p) {
            left.push(i);
        }
        if to_right(p) {
            right.push(i);
        }
    }
    (left, right)
}
