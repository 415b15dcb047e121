//! Least-squares regression trees grown best-first to a fixed number of leaves.
//!
//! Splits are scored by the reduction in sum of squared errors of the targets
//! (the negative gradients during boosting). Leaf values are later replaced by a
//! one-step Newton estimate through [`newton_leaf_values`].

use crate::data::Dataset;
use crate::error::{EviError, Result};

/// Denominators at or below this value give a zero leaf step.
pub const HESSIAN_EPS: f64 = 1e-12;

/// Split gains below this fraction of the node's raw sum of squares are rounding noise.
const MIN_RELATIVE_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// SSE reduction recorded when the split was chosen.
        gain: f64,
    },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    /// Training rows routed through this node.
    pub count: usize,
    /// Sum of squared deviations of the training targets at this node.
    pub sse: f64,
}

/// Binary tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl RegressionTree {
    pub fn single_leaf(value: f64, count: usize, n_features: usize) -> Self {
        Self {
            nodes: vec![Node {
                kind: NodeKind::Leaf { value },
                count,
                sse: 0.0,
            }],
            n_features,
        }
    }

    /// Assemble from raw nodes, checking that child links form a tree rooted at 0.
    pub fn from_nodes(nodes: Vec<Node>, n_features: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(EviError::Parse("tree without nodes".into()));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if seen[id] {
                return Err(EviError::Parse(format!("node {id} reached twice")));
            }
            seen[id] = true;
            if let NodeKind::Split {
                feature, left, right, ..
            } = nodes[id].kind
            {
                if feature >= n_features {
                    return Err(EviError::Parse(format!("node {id} splits on unknown feature {feature}")));
                }
                for c in [left, right] {
                    if c >= nodes.len() {
                        return Err(EviError::Parse(format!("node {id} has dangling child {c}")));
                    }
                    stack.push(c);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(EviError::Parse("unreachable nodes in tree".into()));
        }
        Ok(Self { nodes, n_features })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Leaf { .. }))
            .count()
    }

    /// Id of the leaf reached by `x`. `x` must have `n_features` entries.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match self.nodes[id].kind {
                NodeKind::Leaf { .. } => return id,
                NodeKind::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => id = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub(crate) fn value_at(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(x)].kind {
            NodeKind::Leaf { value } => value,
            NodeKind::Split { .. } => unreachable!(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(EviError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.value_at(x))
    }

    /// Sum of recorded split gains per feature.
    pub fn gain_by_feature(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let NodeKind::Split { feature, gain, .. } = node.kind {
                out[feature] += gain;
            }
        }
        out
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n.kind {
            NodeKind::Leaf { value } => Some(value),
            NodeKind::Split { .. } => None,
        })
    }
}

/// Free-function form of [`RegressionTree::predict`].
pub fn predict_tree(tree: &RegressionTree, x: &[f64]) -> Result<f64> {
    tree.predict(x)
}

/// A freshly grown tree plus the leaf each training row landed in.
#[derive(Debug, Clone)]
pub struct GrownTree {
    pub tree: RegressionTree,
    /// Leaf node id per training row, in the row order given to the grower.
    pub assignment: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Holds per-feature row orderings so repeated growth on the same rows
/// (one tree per boosting iteration) skips re-sorting.
pub struct TreeGrower<'a> {
    data: &'a Dataset,
    rows: Vec<usize>,
    sorted: Vec<Vec<u32>>,
    max_leaves: usize,
    min_leaf: usize,
}

impl<'a> TreeGrower<'a> {
    /// `rows` are dataset row indices used for growth; targets passed to
    /// [`TreeGrower::grow`] are aligned with them.
    pub fn new(data: &'a Dataset, rows: Vec<usize>, max_leaves: usize, min_leaf: usize) -> Result<Self> {
        if max_leaves < 2 {
            return Err(EviError::InvalidConfig(format!("trees need L >= 2, got {max_leaves}")));
        }
        if min_leaf < 1 {
            return Err(EviError::InvalidConfig("min_leaf must be at least 1".into()));
        }
        let sorted = (0..data.p())
            .map(|j| {
                let mut order: Vec<u32> = (0..rows.len() as u32).collect();
                order.sort_by(|&a, &b| {
                    data.value(rows[a as usize], j)
                        .total_cmp(&data.value(rows[b as usize], j))
                        .then(a.cmp(&b))
                });
                order
            })
            .collect();
        Ok(Self {
            data,
            rows,
            sorted,
            max_leaves,
            min_leaf,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn grow(&self, targets: &[f64]) -> Result<GrownTree> {
        let r = self.rows.len();
        if targets.len() != r {
            return Err(EviError::DimensionMismatch {
                expected: r,
                got: targets.len(),
            });
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(EviError::NonFinite("tree targets".into()));
        }
        let p = self.data.p();
        let mut node_of = vec![0usize; r];
        let (count, mean, sse) = stats(targets, &node_of, 0);
        let mut nodes = vec![Node {
            kind: NodeKind::Leaf { value: mean },
            count,
            sse,
        }];
        if r == 0 || r < 2 * self.min_leaf {
            return Ok(GrownTree {
                tree: RegressionTree { nodes, n_features: p },
                assignment: node_of,
            });
        }

        let mut pending: Vec<(usize, Candidate)> = Vec::new();
        if let Some(c) = self.best_split(targets, &node_of, 0, mean) {
            pending.push((0, c));
        }
        let mut n_leaves = 1;
        while n_leaves < self.max_leaves && !pending.is_empty() {
            // largest gain first; ties go to the earliest created leaf
            let mut pick = 0;
            for i in 1..pending.len() {
                let (id, c) = pending[i];
                let (best_id, best) = pending[pick];
                if c.gain > best.gain || (c.gain == best.gain && id < best_id) {
                    pick = i;
                }
            }
            let (id, cand) = pending.swap_remove(pick);
            let left = nodes.len();
            let right = left + 1;
            for (local, node) in node_of.iter_mut().enumerate() {
                if *node == id {
                    let v = self.data.value(self.rows[local], cand.feature);
                    *node = if v <= cand.threshold { left } else { right };
                }
            }
            nodes[id].kind = NodeKind::Split {
                feature: cand.feature,
                threshold: cand.threshold,
                left,
                right,
                gain: cand.gain,
            };
            for child in [left, right] {
                let (count, mean, sse) = stats(targets, &node_of, child);
                nodes.push(Node {
                    kind: NodeKind::Leaf { value: mean },
                    count,
                    sse,
                });
                if count >= 2 * self.min_leaf {
                    if let Some(c) = self.best_split(targets, &node_of, child, mean) {
                        pending.push((child, c));
                    }
                }
            }
            n_leaves += 1;
        }
        Ok(GrownTree {
            tree: RegressionTree { nodes, n_features: p },
            assignment: node_of,
        })
    }

    fn best_split(&self, targets: &[f64], node_of: &[usize], node: usize, mean: f64) -> Option<Candidate> {
        let mut vals: Vec<(f64, f64)> = Vec::new();
        let mut best: Option<Candidate> = None;
        let mut raw_sq = 0.0;
        let mut first = true;
        for (j, order) in self.sorted.iter().enumerate() {
            vals.clear();
            for &local in order {
                let local = local as usize;
                if node_of[local] == node {
                    vals.push((self.data.value(self.rows[local], j), targets[local] - mean));
                }
            }
            if first {
                raw_sq = vals.iter().map(|&(_, d)| (d + mean) * (d + mean)).sum::<f64>();
                first = false;
            }
            let n = vals.len();
            let total: f64 = vals.iter().map(|v| v.1).sum();
            let base = total * total / n as f64;
            let mut left_sum = 0.0;
            for i in 0..n - 1 {
                left_sum += vals[i].1;
                let n_left = i + 1;
                let n_right = n - n_left;
                if n_left < self.min_leaf || n_right < self.min_leaf {
                    continue;
                }
                let (a, b) = (vals[i].0, vals[i + 1].0);
                if !(a < b) {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / n_right as f64 - base;
                if best.is_none_or(|c| gain > c.gain) {
                    best = Some(Candidate {
                        feature: j,
                        threshold: midpoint(a, b),
                        gain,
                    });
                }
            }
        }
        best.filter(|c| c.gain > 0.0 && c.gain > MIN_RELATIVE_GAIN * raw_sq)
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    if m < b {
        m
    } else {
        a
    }
}

fn stats(targets: &[f64], node_of: &[usize], node: usize) -> (usize, f64, f64) {
    let mut count = 0;
    let mut sum = 0.0;
    for (t, &n) in targets.iter().zip(node_of) {
        if n == node {
            count += 1;
            sum += t;
        }
    }
    if count == 0 {
        return (0, 0.0, 0.0);
    }
    let mean = sum / count as f64;
    let sse = targets
        .iter()
        .zip(node_of)
        .filter(|(_, &n)| n == node)
        .map(|(t, _)| (t - mean) * (t - mean))
        .sum();
    (count, mean, sse)
}

/// Grow an `max_leaves`-leaf least-squares tree on all rows of `data`.
pub fn grow(data: &Dataset, targets: &[f64], max_leaves: usize, min_leaf: usize) -> Result<GrownTree> {
    TreeGrower::new(data, (0..data.n()).collect(), max_leaves, min_leaf)?.grow(targets)
}

/// Replace leaf values by `sum(g) / sum(h)` over the training rows in each leaf.
/// Leaves whose Hessian sum is at most [`HESSIAN_EPS`] get value 0.
pub fn newton_leaf_values(grown: &GrownTree, gradients: &[f64], hessians: &[f64]) -> Result<RegressionTree> {
    let r = grown.assignment.len();
    for len in [gradients.len(), hessians.len()] {
        if len != r {
            return Err(EviError::DimensionMismatch { expected: r, got: len });
        }
    }
    let mut tree = grown.tree.clone();
    let mut g_sum = vec![0.0; tree.nodes.len()];
    let mut h_sum = vec![0.0; tree.nodes.len()];
    for ((&leaf, g), h) in grown.assignment.iter().zip(gradients).zip(hessians) {
        g_sum[leaf] += g;
        h_sum[leaf] += h;
    }
    for (id, node) in tree.nodes.iter_mut().enumerate() {
        if let NodeKind::Leaf { value } = &mut node.kind {
            *value = if h_sum[id] > HESSIAN_EPS { g_sum[id] / h_sum[id] } else { 0.0 };
        }
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_feature(xs: &[f64]) -> Dataset {
        Dataset::from_rows(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>(), vec![1.0; xs.len()]).unwrap()
    }

    #[test]
    fn constant_targets_single_leaf() {
        let d = one_feature(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let g = grow(&d, &[0.1; 6], 4, 1).unwrap();
        assert_eq!(g.tree.n_leaves(), 1);
    }

    #[test]
    fn step_split_at_midpoint() {
        let d = one_feature(&[1.0, 2.0, 3.0, 4.0]);
        let g = grow(&d, &[0.0, 0.0, 10.0, 10.0], 2, 1).unwrap();
        match g.tree.nodes()[0].kind {
            NodeKind::Split { feature, threshold, gain, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 2.5);
                assert!((gain - 100.0).abs() < 1e-12);
            }
            _ => panic!("expected split"),
        }
        assert_eq!(g.tree.predict(&[2.0]).unwrap(), 0.0);
        assert_eq!(g.tree.predict(&[3.0]).unwrap(), 10.0);
    }

    #[test]
    fn leaf_budget_respected() {
        let xs: Vec<f64> = (0..40).map(f64::from).collect();
        let d = one_feature(&xs);
        let t: Vec<f64> = xs.iter().map(|x| (x * 0.7).sin()).collect();
        for l in 2..6 {
            let g = grow(&d, &t, l, 2).unwrap();
            assert!(g.tree.n_leaves() <= l);
        }
    }

    #[test]
    fn too_few_rows_is_single_leaf() {
        let d = one_feature(&[1.0, 2.0, 3.0]);
        let g = grow(&d, &[0.0, 5.0, 9.0], 2, 2).unwrap();
        assert_eq!(g.tree.n_leaves(), 1);
    }

    #[test]
    fn non_finite_target_errors() {
        let d = one_feature(&[1.0, 2.0]);
        assert!(grow(&d, &[0.0, f64::NAN], 2, 1).is_err());
    }

    #[test]
    fn min_leaf_respected() {
        let d = one_feature(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let g = grow(&d, &[9.0, 0.0, 0.0, 0.0, 0.0, 0.0], 2, 2).unwrap();
        for n in g.tree.nodes() {
            assert!(n.count >= 2);
        }
    }

    #[test]
    fn newton_examples() {
        let grown = GrownTree {
            tree: RegressionTree::single_leaf(0.0, 1, 1),
            assignment: vec![0],
        };
        let t = newton_leaf_values(&grown, &[1.0], &[3.0]).unwrap();
        assert!((t.predict(&[0.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let t = newton_leaf_values(&grown, &[0.0], &[3.0]).unwrap();
        assert_eq!(t.predict(&[0.0]).unwrap(), 0.0);

        let grown = GrownTree {
            tree: RegressionTree::single_leaf(0.0, 2, 1),
            assignment: vec![0, 0],
        };
        let t = newton_leaf_values(&grown, &[2.0, 2.0], &[12.0, 12.0]).unwrap();
        assert!((t.predict(&[0.0]).unwrap() - 1.0 / 6.0).abs() < 1e-15);

        let t = newton_leaf_values(&grown, &[2.0, 2.0], &[-1.0, 0.5]).unwrap();
        assert_eq!(t.predict(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn unit_hessian_gives_leaf_means() {
        let d = one_feature(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let t = [1.0, 2.0, 3.0, 10.0, 11.0, 15.0];
        let g = grow(&d, &t, 3, 1).unwrap();
        let newton = newton_leaf_values(&g, &t, &[1.0; 6]).unwrap();
        for (a, b) in g.tree.leaf_values().zip(newton.leaf_values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn predict_dimension_mismatch() {
        let t = RegressionTree::single_leaf(2.0, 1, 3);
        assert_eq!(t.predict(&[0.0, 1.0, 2.0]).unwrap(), 2.0);
        assert!(t.predict(&[0.0]).is_err());
    }

    #[test]
    fn from_nodes_rejects_cycles() {
        let nodes = vec![Node {
            kind: NodeKind::Split {
                feature: 0,
                threshold: 0.0,
                left: 0,
                right: 0,
                gain: 0.0,
            },
            count: 0,
            sse: 0.0,
        }];
        assert!(RegressionTree::from_nodes(nodes, 1).is_err());
    }
}
