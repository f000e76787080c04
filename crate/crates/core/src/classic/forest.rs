use serde::{Deserialize, Serialize};

use super::tree::{grow, DecisionTree, TreeParams};
use super::{argmax_count, check_training, ClassicError, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, Xorshift64Star};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Train each tree on `n` rows drawn with replacement.
    pub bootstrap: bool,
    /// Consider `⌈√d⌉` random features per split instead of all `d`.
    pub feature_subsample: bool,
    pub max_depth: Option<usize>,
    pub min_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        let tree = TreeParams::default();
        Self {
            n_trees: 10,
            bootstrap: true,
            feature_subsample: true,
            max_depth: tree.max_depth,
            min_split: tree.min_split,
        }
    }
}

/// Bagged ensemble of information-gain trees voting by majority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub n_classes: usize,
}

/// `k` distinct indices from `0..d`, ascending.
fn sample_features(rng: &mut Xorshift64Star, d: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..d).collect();
    for i in 0..k {
        let j = i + rng.below(d - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_unstable();
    pool
}

/// Tree `t` draws its bootstrap sample and split features from a generator
/// seeded with `derive_seed(seed, t)`, so each tree is reproducible on its own.
pub fn fit_random_forest(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    params: &ForestParams,
    seed: u64,
) -> Result<RandomForest> {
    check_training(x, y, n_classes)?;
    if params.n_trees == 0 {
        return Err(ClassicError::Param("n_trees must be at least 1".into()));
    }
    let (n, d) = x.shape();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_split: params.min_split,
    };
    let per_split = if params.feature_subsample {
        ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1))
    } else {
        d
    };
    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let mut rng = Xorshift64Star::new(derive_seed(seed, t as u64));
        let rows: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.below(n)).collect()
        } else {
            (0..n).collect()
        };
        let mut features = || {
            if per_split == d {
                (0..d).collect()
            } else {
                sample_features(&mut rng, d, per_split)
            }
        };
        let root = grow(x, y, &rows, 0, &tree_params, n_classes, &mut features);
        trees.push(DecisionTree {
            root,
            n_features: d,
            n_classes,
        });
    }
    Ok(RandomForest {
        trees,
        n_features: d,
        n_classes,
    })
}

impl RandomForest {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    fn votes(&self, row: &[f64]) -> Vec<usize> {
        let mut v = vec![0usize; self.n_classes];
        for t in &self.trees {
            v[t.predict_row(row)] += 1;
        }
        v
    }

    /// Majority vote; ties go to the lower class index.
    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        x.row_iter().map(|r| argmax_count(&self.votes(r))).collect()
    }

    /// Fraction of trees voting for each class.
    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        let n = self.trees.len() as f64;
        for (i, r) in x.row_iter().enumerate() {
            for (o, v) in out.row_mut(i).iter_mut().zip(self.votes(r)) {
                *o = v as f64 / n;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::{fit_decision_tree, TreeNode};

    fn leaf_tree(label: usize) -> DecisionTree {
        let mut counts = vec![0; 2];
        counts[label] = 1;
        DecisionTree {
            root: TreeNode::Leaf { label, counts },
            n_features: 1,
            n_classes: 2,
        }
    }

    fn fixture(seed: u64, n: usize, d: usize) -> (Matrix, Vec<usize>) {
        let mut rng = Xorshift64Star::new(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.normal()).collect())
            .collect();
        let y = rows
            .iter()
            .map(|r| usize::from(r[0] + 0.5 * r[d - 1] > 0.0) + usize::from(r[1] > 1.0))
            .collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn default_has_ten_trees() {
        assert_eq!(ForestParams::default().n_trees, 10);
    }

    #[test]
    fn majority_of_three_votes() {
        let forest = RandomForest {
            trees: vec![leaf_tree(0), leaf_tree(0), leaf_tree(1)],
            n_features: 1,
            n_classes: 2,
        };
        let q = Matrix::from_rows(&[[0.0]]).unwrap();
        assert_eq!(forest.predict(&q), vec![0]);
        let p = forest.predict_proba(&q);
        assert!((p[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tied_vote_goes_to_lower_class() {
        let forest = RandomForest {
            trees: vec![leaf_tree(1), leaf_tree(0)],
            n_features: 1,
            n_classes: 2,
        };
        assert_eq!(
            forest.predict(&Matrix::from_rows(&[[0.0]]).unwrap()),
            vec![0]
        );
    }

    #[test]
    fn single_plain_tree_matches_decision_tree() {
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            feature_subsample: false,
            ..ForestParams::default()
        };
        for seed in 0..5 {
            let (x, y) = fixture(seed, 120, 5);
            let forest = fit_random_forest(&x, &y, 3, &params, seed).unwrap();
            let tree = fit_decision_tree(&x, &y, 3, &TreeParams::default()).unwrap();
            assert_eq!(forest.trees[0], tree);
            assert_eq!(forest.predict(&x), tree.predict(&x));
        }
    }

    #[test]
    fn seeded_fit_is_reproducible() {
        let (x, y) = fixture(9, 200, 6);
        let a = fit_random_forest(&x, &y, 3, &ForestParams::default(), 42).unwrap();
        let b = fit_random_forest(&x, &y, 3, &ForestParams::default(), 42).unwrap();
        let c = fit_random_forest(&x, &y, 3, &ForestParams::default(), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn feature_sample_is_sorted_and_distinct() {
        let mut rng = Xorshift64Star::new(5);
        for _ in 0..100 {
            let s = sample_features(&mut rng, 13, 4);
            assert_eq!(s.len(), 4);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&f| f < 13));
        }
    }
}
