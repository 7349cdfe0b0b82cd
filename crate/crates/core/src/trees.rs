//! Least-squares regression trees with axis-parallel splits.
//!
//! Trees are grown best-first: every current leaf proposes its best split and
//! the one with the largest reduction of the sum of squared errors is applied,
//! until the requested number of leaves is reached or no leaf can improve.
//! Candidate thresholds are midpoints between consecutive distinct feature
//! values and a point goes left iff `x[feature] <= threshold`.

use alloc::format;
use alloc::vec::Vec;

use crate::data::Matrix;
use crate::{Error, Result};

const NO_LEAF: u32 = u32::MAX;

/// Gains at or below this fraction of the leaf's `sum z^2` are rounding noise.
const RELATIVE_GAIN_FLOOR: f64 = 1e-14;

/// One node of the flat tree array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Axis-parallel split.
    Internal {
        /// 0-based feature column.
        feature: usize,
        /// Points with `x[feature] <= threshold` go left.
        threshold: f64,
        /// Index of the left child.
        left: usize,
        /// Index of the right child.
        right: usize,
    },
    /// Terminal region.
    Leaf {
        /// 0-based leaf number.
        leaf_id: usize,
        /// Additive value of the region (set by boosting's line search).
        weight: f64,
        /// Mean of the fitted targets in the region.
        mean_target: f64,
    },
}

/// Binary regression tree stored as a flat node array rooted at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    leaf_nodes: Vec<usize>,
}

impl Tree {
    /// Builds a tree from raw nodes, checking that they form one binary tree
    /// rooted at 0 whose leaves are numbered `0..leaf_count`.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidModel("tree without nodes".into()));
        }
        let mut referenced = alloc::vec![false; nodes.len()];
        let mut leaf_nodes = alloc::vec![usize::MAX; nodes.len()];
        let mut leaf_count = 0;
        for (i, node) in nodes.iter().enumerate() {
            match *node {
                Node::Internal {
                    left,
                    right,
                    threshold,
                    ..
                } => {
                    if !threshold.is_finite() {
                        return Err(Error::InvalidModel(format!(
                            "node {i}: non-finite threshold"
                        )));
                    }
                    for child in [left, right] {
                        if child == 0 || child >= nodes.len() {
                            return Err(Error::InvalidModel(format!(
                                "node {i}: dangling child index {child}"
                            )));
                        }
                        if core::mem::replace(&mut referenced[child], true) {
                            return Err(Error::InvalidModel(format!(
                                "node {child} referenced twice"
                            )));
                        }
                    }
                }
                Node::Leaf {
                    leaf_id, weight, ..
                } => {
                    if !weight.is_finite() {
                        return Err(Error::InvalidModel(format!(
                            "leaf {leaf_id}: non-finite weight"
                        )));
                    }
                    if leaf_id >= nodes.len() || leaf_nodes[leaf_id] != usize::MAX {
                        return Err(Error::InvalidModel(format!(
                            "bad or repeated leaf id {leaf_id}"
                        )));
                    }
                    leaf_nodes[leaf_id] = i;
                    leaf_count += 1;
                }
            }
        }
        if leaf_count != nodes.len() - leaf_count + 1 {
            return Err(Error::InvalidModel(format!(
                "{} internal nodes for {leaf_count} leaves",
                nodes.len() - leaf_count
            )));
        }
        leaf_nodes.truncate(leaf_count);
        if leaf_nodes.contains(&usize::MAX) {
            return Err(Error::InvalidModel("leaf ids are not 0..leaf_count".into()));
        }
        // every non-root node has exactly one parent; reachability from the
        // root rules out cycles among the remaining nodes
        if referenced.iter().skip(1).any(|r| !r) {
            return Err(Error::InvalidModel("unreferenced node".into()));
        }
        let mut seen = 0;
        let mut stack = alloc::vec![0usize];
        while let Some(i) = stack.pop() {
            seen += 1;
            if let Node::Internal { left, right, .. } = nodes[i] {
                stack.push(left);
                stack.push(right);
            }
            if seen > nodes.len() {
                break;
            }
        }
        if seen != nodes.len() {
            return Err(Error::InvalidModel(
                "nodes unreachable from the root".into(),
            ));
        }
        Ok(Self { nodes, leaf_nodes })
    }

    fn single_leaf(mean_target: f64) -> Self {
        Self {
            nodes: alloc::vec![Node::Leaf {
                leaf_id: 0,
                weight: mean_target,
                mean_target,
            }],
            leaf_nodes: alloc::vec![0],
        }
    }

    /// Flat node array.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Number of leaves.
    pub fn leaf_count(&self) -> usize {
        self.leaf_nodes.len()
    }

    /// Leaf reached by `x`.
    #[inline]
    pub fn route(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
                Node::Leaf { leaf_id, .. } => return leaf_id,
            }
        }
    }

    /// Weight of the leaf reached by `x`.
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.leaf_weight(self.route(x))
    }

    /// Weight of leaf `leaf_id`.
    pub fn leaf_weight(&self, leaf_id: usize) -> f64 {
        match self.nodes[self.leaf_nodes[leaf_id]] {
            Node::Leaf { weight, .. } => weight,
            Node::Internal { .. } => unreachable!("leaf index points at an internal node"),
        }
    }

    /// Mean fitted target of leaf `leaf_id`.
    pub fn leaf_mean_target(&self, leaf_id: usize) -> f64 {
        match self.nodes[self.leaf_nodes[leaf_id]] {
            Node::Leaf { mean_target, .. } => mean_target,
            Node::Internal { .. } => unreachable!("leaf index points at an internal node"),
        }
    }

    /// Overwrites the weight of leaf `leaf_id`.
    pub fn set_leaf_weight(&mut self, leaf_id: usize, w: f64) {
        if let Node::Leaf { weight, .. } = &mut self.nodes[self.leaf_nodes[leaf_id]] {
            *weight = w;
        }
    }

    /// `(feature, threshold)` of every internal node in array order.
    pub fn splits(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Internal {
                feature, threshold, ..
            } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        })
    }
}

/// A proposed split of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    /// 0-based feature column.
    pub feature: usize,
    /// Threshold; `<=` goes left.
    pub threshold: f64,
    /// `SSE(parent) - SSE(left) - SSE(right)`.
    pub sse_reduction: f64,
    /// Rows sent left.
    pub left_count: usize,
    /// Rows sent right.
    pub right_count: usize,
}

/// Per-feature row orders, sorted by value (ties by row index).
///
/// Built once per training set and reused across boosting iterations since
/// only the targets change.
#[derive(Debug, Clone)]
pub struct SortedFeatures {
    order: Vec<Vec<u32>>,
    member: Vec<bool>,
}

impl SortedFeatures {
    /// Orders over every row of `x`.
    pub fn new(x: &Matrix) -> Self {
        let rows: Vec<usize> = (0..x.rows()).collect();
        Self::for_rows(x, &rows)
    }

    /// Orders over the given rows of `x` only.
    pub fn for_rows(x: &Matrix, rows: &[usize]) -> Self {
        assert!(x.rows() < NO_LEAF as usize, "too many rows");
        let mut member = alloc::vec![false; x.rows()];
        let mut base: Vec<u32> = Vec::with_capacity(rows.len());
        for &r in rows {
            if !core::mem::replace(&mut member[r], true) {
                base.push(r as u32);
            }
        }
        base.sort_unstable();
        let order = (0..x.cols())
            .map(|j| {
                let mut o = base.clone();
                o.sort_by(|&a, &b| x.get(a as usize, j).total_cmp(&x.get(b as usize, j)));
                o
            })
            .collect();
        Self { order, member }
    }

    /// Rows covered, ascending.
    fn rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.member
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }
}

struct LeafStats {
    count: usize,
    sum: f64,
    sum_sq: f64,
}

/// Best split of the rows currently assigned to `leaf`.
fn scan_leaf(
    x: &Matrix,
    z: &[f64],
    sorted: &SortedFeatures,
    leaf_of: &[u32],
    leaf: u32,
    stats: &LeafStats,
    min_leaf: usize,
) -> Option<SplitCandidate> {
    let n = stats.count;
    let min_leaf = min_leaf.max(1);
    if n < 2 * min_leaf {
        return None;
    }
    let floor = RELATIVE_GAIN_FLOOR * stats.sum_sq;
    let mut best: Option<SplitCandidate> = None;
    for (feature, order) in sorted.order.iter().enumerate() {
        let mut left_count = 0usize;
        let mut left_sum = 0.0;
        let mut prev = f64::NAN;
        for &r in order {
            let r = r as usize;
            if leaf_of[r] != leaf {
                continue;
            }
            let v = x.get(r, feature);
            if left_count > 0 && v > prev && left_count >= min_leaf && n - left_count >= min_leaf {
                let right_count = n - left_count;
                let mean_l = left_sum / left_count as f64;
                let mean_r = (stats.sum - left_sum) / right_count as f64;
                let diff = mean_l - mean_r;
                let gain = (left_count as f64) * (right_count as f64) / (n as f64) * diff * diff;
                if gain > floor && best.map_or(true, |b| gain > b.sse_reduction) {
                    best = Some(SplitCandidate {
                        feature,
                        threshold: midpoint(prev, v),
                        sse_reduction: gain,
                        left_count,
                        right_count,
                    });
                }
            }
            left_count += 1;
            left_sum += z[r];
            prev = v;
        }
    }
    best
}

/// Midpoint of `a < b` that still routes `a` left and `b` right.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = 0.5 * a + 0.5 * b;
    if m >= a && m < b {
        m
    } else {
        a
    }
}

fn stats_of(rows: impl Iterator<Item = usize>, z: &[f64]) -> LeafStats {
    let mut s = LeafStats {
        count: 0,
        sum: 0.0,
        sum_sq: 0.0,
    };
    for r in rows {
        s.count += 1;
        s.sum += z[r];
        s.sum_sq += z[r] * z[r];
    }
    s
}

/// Best single split of `rows` for targets `z` (indexed by row of `x`).
///
/// Exhaustive over features and midpoints; ties go to the smallest feature,
/// then the smallest threshold. `None` when no split moves the SSE or every
/// split leaves fewer than `min_leaf` rows on a side.
pub fn best_split(
    rows: &[usize],
    x: &Matrix,
    z: &[f64],
    min_leaf: usize,
) -> Option<SplitCandidate> {
    let sorted = SortedFeatures::for_rows(x, rows);
    let leaf_of: Vec<u32> = sorted
        .member
        .iter()
        .map(|&m| if m { 0 } else { NO_LEAF })
        .collect();
    let stats = stats_of(sorted.rows(), z);
    scan_leaf(x, z, &sorted, &leaf_of, 0, &stats, min_leaf)
}

/// Fits a tree with at most `k` leaves to targets `z` on `rows` of `x`.
/// Leaf weights start at the leaf mean of `z`.
pub fn fit_tree(rows: &[usize], x: &Matrix, z: &[f64], k: usize, min_leaf: usize) -> Tree {
    let sorted = SortedFeatures::for_rows(x, rows);
    TreeGrower::new(sorted).grow(x, z, k, min_leaf)
}

/// Reusable tree fitter over a fixed row set.
///
/// Keeps the presorted feature orders and, after each [`TreeGrower::grow`],
/// the leaf id of every covered row.
#[derive(Debug, Clone)]
pub struct TreeGrower {
    sorted: SortedFeatures,
    leaf_of: Vec<u32>,
}

struct OpenLeaf {
    node: usize,
    stats: LeafStats,
    best: Option<SplitCandidate>,
}

impl TreeGrower {
    /// Grower over the rows covered by `sorted`.
    pub fn new(sorted: SortedFeatures) -> Self {
        let leaf_of = alloc::vec![NO_LEAF; sorted.member.len()];
        Self { sorted, leaf_of }
    }

    /// Leaf id of each row after the last `grow` (`u32::MAX` for rows outside
    /// the set).
    pub fn assignment(&self) -> &[u32] {
        &self.leaf_of
    }

    /// Grows a tree best-first. `z` is indexed by row of `x`.
    pub fn grow(&mut self, x: &Matrix, z: &[f64], k: usize, min_leaf: usize) -> Tree {
        assert!(k >= 1, "a tree needs at least one leaf");
        // during growth leaf_of holds node indices
        for (slot, &m) in self.leaf_of.iter_mut().zip(&self.sorted.member) {
            *slot = if m { 0 } else { NO_LEAF };
        }
        let root_stats = stats_of(self.sorted.rows(), z);
        if root_stats.count == 0 {
            return Tree::single_leaf(0.0);
        }
        let mut nodes: Vec<Node> = alloc::vec![Node::Leaf {
            leaf_id: 0,
            weight: 0.0,
            mean_target: 0.0,
        }];
        let best = if k >= 2 {
            scan_leaf(x, z, &self.sorted, &self.leaf_of, 0, &root_stats, min_leaf)
        } else {
            None
        };
        let mut open = alloc::vec![OpenLeaf {
            node: 0,
            stats: root_stats,
            best,
        }];
        while open.len() < k {
            // earliest-created leaf wins ties; `open` stays in creation order
            let mut pick: Option<usize> = None;
            for (i, leaf) in open.iter().enumerate() {
                if let Some(c) = leaf.best {
                    if pick.map_or(true, |p| {
                        c.sse_reduction > open[p].best.unwrap().sse_reduction
                    }) {
                        pick = Some(i);
                    }
                }
            }
            let Some(pick) = pick else { break };
            let parent = open.remove(pick);
            let split = parent.best.unwrap();
            let left = nodes.len();
            let right = left + 1;
            nodes[parent.node] = Node::Internal {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            for _ in 0..2 {
                nodes.push(Node::Leaf {
                    leaf_id: 0,
                    weight: 0.0,
                    mean_target: 0.0,
                });
            }
            let mut left_rows = Vec::with_capacity(split.left_count);
            let mut right_rows = Vec::with_capacity(split.right_count);
            for r in self.sorted.rows() {
                if self.leaf_of[r] as usize == parent.node {
                    if x.get(r, split.feature) <= split.threshold {
                        self.leaf_of[r] = left as u32;
                        left_rows.push(r);
                    } else {
                        self.leaf_of[r] = right as u32;
                        right_rows.push(r);
                    }
                }
            }
            for (node, child_rows) in [(left, left_rows), (right, right_rows)] {
                let stats = stats_of(child_rows.into_iter(), z);
                let best = scan_leaf(
                    x,
                    z,
                    &self.sorted,
                    &self.leaf_of,
                    node as u32,
                    &stats,
                    min_leaf,
                );
                open.push(OpenLeaf { node, stats, best });
            }
        }
        // number leaves left to right and translate the row assignment
        let mut leaf_id_of_node = alloc::vec![NO_LEAF; nodes.len()];
        let mut next = 0u32;
        let mut stack = alloc::vec![0usize];
        while let Some(i) = stack.pop() {
            match nodes[i] {
                Node::Internal { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
                Node::Leaf { .. } => {
                    leaf_id_of_node[i] = next;
                    next += 1;
                }
            }
        }
        for leaf in &open {
            let mean = leaf.stats.sum / leaf.stats.count as f64;
            nodes[leaf.node] = Node::Leaf {
                leaf_id: leaf_id_of_node[leaf.node] as usize,
                weight: mean,
                mean_target: mean,
            };
        }
        for slot in self.leaf_of.iter_mut().filter(|s| **s != NO_LEAF) {
            *slot = leaf_id_of_node[*slot as usize];
        }
        Tree::from_nodes(nodes).expect("grown tree is structurally valid")
    }
}
