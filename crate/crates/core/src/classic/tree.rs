use serde::{Deserialize, Serialize};

use super::{argmax_count, check_training, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    /// `None` grows until every leaf is pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: Some(12),
            min_split: 2,
        }
    }
}

/// A node of a binary classification tree. Rows go left iff
/// `x[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        label: usize,
        counts: Vec<usize>,
    },
}

impl TreeNode {
    fn leaf(counts: Vec<usize>) -> Self {
        TreeNode::Leaf {
            label: argmax_count(&counts),
            counts,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    fn find_leaf(&self, row: &[f64]) -> (usize, &[usize]) {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { label, counts } => return (*label, counts),
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub n_features: usize,
    pub n_classes: usize,
}

/// Shannon entropy in bits of a class-count histogram.
pub fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Parent entropy minus the size-weighted entropy of the two children.
pub fn information_gain(parent: &[usize], left: &[usize], right: &[usize]) -> f64 {
    let nl: usize = left.iter().sum();
    let nr: usize = right.iter().sum();
    let n = (nl + nr) as f64;
    entropy(parent) - (nl as f64 / n) * entropy(left) - (nr as f64 / n) * entropy(right)
}

/// Gains closer than this are treated as equal so that split ties resolve by
/// feature index and threshold rather than rounding noise.
const GAIN_EPS: f64 = 1e-12;

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

/// Best split of `rows` over `features` (ascending). Zero-gain splits are
/// allowed so that interactions such as XOR can still be separated deeper.
fn best_split(
    x: &Matrix,
    y: &[usize],
    rows: &[usize],
    features: &[usize],
    parent: &[usize],
    n_classes: usize,
) -> Option<Split> {
    let mut best: Option<Split> = None;
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    let mut left = vec![0usize; n_classes];
    let mut right = vec![0usize; n_classes];
    for &f in features {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (x[(r, f)], y[r])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        left.fill(0);
        right.copy_from_slice(parent);
        for i in 0..pairs.len() - 1 {
            let (v, c) = pairs[i];
            left[c] += 1;
            right[c] -= 1;
            let next = pairs[i + 1].0;
            if next <= v {
                continue;
            }
            let gain = information_gain(parent, &left, &right);
            if best.as_ref().is_none_or(|b| gain > b.gain + GAIN_EPS) {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(v, next),
                    gain,
                });
            }
        }
    }
    best
}

/// Recursive greedy growth shared by the tree and the forest. `features`
/// yields the candidate feature set for each split.
pub(crate) fn grow(
    x: &Matrix,
    y: &[usize],
    rows: &[usize],
    depth: usize,
    params: &TreeParams,
    n_classes: usize,
    features: &mut dyn FnMut() -> Vec<usize>,
) -> TreeNode {
    let mut counts = vec![0usize; n_classes];
    for &r in rows {
        counts[y[r]] += 1;
    }
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    let depth_reached = params.max_depth.is_some_and(|m| depth >= m);
    if pure || depth_reached || rows.len() < params.min_split.max(2) {
        return TreeNode::leaf(counts);
    }
    let candidates = features();
    let Some(split) = best_split(x, y, rows, &candidates, &counts, n_classes) else {
        return TreeNode::leaf(counts);
    };
    let (l, r): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&i| x[(i, split.feature)] <= split.threshold);
    TreeNode::Internal {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(x, y, &l, depth + 1, params, n_classes, features)),
        right: Box::new(grow(x, y, &r, depth + 1, params, n_classes, features)),
    }
}

/// Greedy information-gain tree over all features. Candidate thresholds are
/// midpoints between consecutive distinct values; ties favour the lower
/// feature index, then the lower threshold.
pub fn fit_decision_tree(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    params: &TreeParams,
) -> Result<DecisionTree> {
    check_training(x, y, n_classes)?;
    let rows: Vec<usize> = (0..x.rows()).collect();
    let all: Vec<usize> = (0..x.cols()).collect();
    let root = grow(x, y, &rows, 0, params, n_classes, &mut || all.clone());
    Ok(DecisionTree {
        root,
        n_features: x.cols(),
        n_classes,
    })
}

impl DecisionTree {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        self.root.find_leaf(row).0
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        x.row_iter().map(|r| self.predict_row(r)).collect()
    }

    /// Class frequencies of the training rows in the reached leaf.
    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        for (i, r) in x.row_iter().enumerate() {
            let (_, counts) = self.root.find_leaf(r);
            let total: usize = counts.iter().sum();
            for (o, &c) in out.row_mut(i).iter_mut().zip(counts) {
                *o = c as f64 / total as f64;
            }
        }
        out
    }
}
