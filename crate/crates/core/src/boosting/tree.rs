//! Weighted-Gini CART classification trees.

use crate::error::{Error, Result};
use crate::gaze_data::TaskLabel;
use crate::matrix::Matrix;

/// Candidate splits must beat the incumbent by more than this (in units of
/// node weight times Gini) to replace it, so float noise never reorders ties.
pub(crate) const GINI_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: TaskLabel,
    },
}

/// Node arena in pre-order; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTreeModel {
    nodes: Vec<Node>,
    max_depth: usize,
    n_features: usize,
}

impl DecisionTreeModel {
    /// Validates structure: children exist, indices are pre-order, depth and
    /// feature bounds hold, thresholds are finite.
    pub fn from_nodes(nodes: Vec<Node>, max_depth: usize, n_features: usize) -> Result<Self> {
        let tree = DecisionTreeModel {
            nodes,
            max_depth,
            n_features,
        };
        if tree.nodes.is_empty() {
            return Err(Error::Model("tree has no nodes".into()));
        }
        let mut next = 0;
        tree.check_subtree(0, 0, &mut next)?;
        if next != tree.nodes.len() {
            return Err(Error::Model("tree has unreachable nodes".into()));
        }
        Ok(tree)
    }

    fn check_subtree(&self, idx: usize, depth: usize, next: &mut usize) -> Result<()> {
        if idx != *next || idx >= self.nodes.len() {
            return Err(Error::Model("tree nodes are not in pre-order".into()));
        }
        *next += 1;
        match self.nodes[idx] {
            Node::Leaf { .. } => Ok(()),
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if depth >= self.max_depth {
                    return Err(Error::Model(format!("tree deeper than {}", self.max_depth)));
                }
                if feature >= self.n_features || !threshold.is_finite() {
                    return Err(Error::Model(format!("bad split on feature {feature}")));
                }
                self.check_subtree(left, depth + 1, next)?;
                self.check_subtree(right, depth + 1, next)
            }
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    #[inline]
    pub fn predict(&self, x: &[f64]) -> TaskLabel {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

/// Row indices ordered by value, one list per feature. Reused across
/// boosting rounds since the feature matrix never changes.
#[derive(Debug, Clone)]
pub struct SortedColumns {
    order: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub fn new(x: &Matrix) -> Self {
        let order = (0..x.cols())
            .map(|j| {
                let mut idx: Vec<u32> = (0..x.rows() as u32).collect();
                idx.sort_by(|&a, &b| x.get(a as usize, j).total_cmp(&x.get(b as usize, j)).then(a.cmp(&b)));
                idx
            })
            .collect();
        SortedColumns { order }
    }
}

pub(crate) fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Weight("weights must be finite and non-negative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Weight(format!("weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Weighted Gini impurity scaled by node weight: W - sum_k W_k^2 / W.
#[inline]
pub(crate) fn scaled_gini(class_weights: &[f64]) -> f64 {
    let w: f64 = class_weights.iter().sum();
    if w <= 0.0 {
        return 0.0;
    }
    w - class_weights.iter().map(|c| c * c).sum::<f64>() / w
}

/// Midpoint of two consecutive distinct values, kept strictly below `hi`.
#[inline]
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

/// Heaviest class; ties go to the earlier class. A weightless node falls
/// back to row counts.
pub(crate) fn majority(class_weights: &[f64], class_counts: &[usize]) -> TaskLabel {
    let total: f64 = class_weights.iter().sum();
    let mut best = 0;
    for k in 1..class_weights.len() {
        let better = if total > 0.0 {
            class_weights[k] > class_weights[best]
        } else {
            class_counts[k] > class_counts[best]
        };
        if better {
            best = k;
        }
    }
    TaskLabel::new(best)
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [TaskLabel],
    w: &'a [f64],
    n_classes: usize,
    max_depth: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn histogram(&self, members: &[u32]) -> (Vec<f64>, Vec<usize>) {
        let mut weights = vec![0.0; self.n_classes];
        let mut counts = vec![0; self.n_classes];
        for &i in members {
            let k = self.y[i as usize].index();
            weights[k] += self.w[i as usize];
            counts[k] += 1;
        }
        (weights, counts)
    }

    fn best_split(&self, lists: &[Vec<u32>], node_weights: &[f64]) -> Option<BestSplit> {
        let mut best: Option<BestSplit> = None;
        let mut left = vec![0.0; self.n_classes];
        let mut right = vec![0.0; self.n_classes];
        for (feature, list) in lists.iter().enumerate() {
            left.iter_mut().for_each(|v| *v = 0.0);
            right.copy_from_slice(node_weights);
            for p in 0..list.len().saturating_sub(1) {
                let i = list[p] as usize;
                let k = self.y[i].index();
                left[k] += self.w[i];
                right[k] -= self.w[i];
                let here = self.x.get(i, feature);
                let next = self.x.get(list[p + 1] as usize, feature);
                if here == next {
                    continue;
                }
                let impurity = scaled_gini(&left) + scaled_gini(&right);
                if best.as_ref().is_none_or(|b| impurity < b.impurity - GINI_EPS) {
                    best = Some(BestSplit {
                        feature,
                        threshold: midpoint(here, next),
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, lists: Vec<Vec<u32>>, depth: usize) -> usize {
        let idx = self.nodes.len();
        let (weights, counts) = self.histogram(&lists[0]);
        let leaf = Node::Leaf {
            class: majority(&weights, &counts),
        };
        self.nodes.push(leaf);

        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if depth >= self.max_depth || pure {
            return idx;
        }
        let parent = scaled_gini(&weights);
        let Some(split) = self.best_split(&lists, &weights) else {
            return idx;
        };
        if parent - split.impurity <= GINI_EPS {
            return idx;
        }

        let goes_left = |i: u32| self.x.get(i as usize, split.feature) <= split.threshold;
        let (left_lists, right_lists): (Vec<_>, Vec<_>) = lists
            .into_iter()
            .map(|l| l.into_iter().partition::<Vec<u32>, _>(|&i| goes_left(i)))
            .unzip();
        let left = self.grow(left_lists, depth + 1);
        let right = self.grow(right_lists, depth + 1);
        self.nodes[idx] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        idx
    }
}

/// Greedy CART on weighted Gini impurity. `weights` must be a probability
/// vector (sum within 1e-6 of one).
pub fn train_tree(x: &Matrix, y: &[TaskLabel], weights: &[f64], n_classes: usize, max_depth: usize) -> Result<DecisionTreeModel> {
    train_tree_presorted(x, &SortedColumns::new(x), y, weights, n_classes, max_depth)
}

pub fn train_tree_presorted(
    x: &Matrix,
    sorted: &SortedColumns,
    y: &[TaskLabel],
    weights: &[f64],
    n_classes: usize,
    max_depth: usize,
) -> Result<DecisionTreeModel> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::EmptyDataset("cannot grow a tree on zero rows".into()));
    }
    if y.len() != n {
        return Err(Error::Shape { expected: n, got: y.len() });
    }
    check_weights(weights, n)?;
    if let Some(bad) = y.iter().find(|l| l.index() >= n_classes) {
        return Err(Error::Label(format!("label {} outside {n_classes} classes", bad.index())));
    }
    let mut builder = Builder {
        x,
        y,
        w: weights,
        n_classes,
        max_depth,
        nodes: Vec::new(),
    };
    let lists = if x.cols() == 0 {
        vec![(0..n as u32).collect()]
    } else {
        sorted.order.clone()
    };
    builder.grow(lists, 0);
    Ok(DecisionTreeModel {
        nodes: builder.nodes,
        max_depth,
        n_features: x.cols(),
    })
}
