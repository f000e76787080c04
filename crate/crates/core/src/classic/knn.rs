use serde::{Deserialize, Serialize};

use super::{check_training, ClassicError, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
    /// Minkowski order, `p >= 1`.
    pub p: f64,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5, p: 2.0 }
    }
}

/// `(Σ|aᵢ − bᵢ|^p)^(1/p)`, with exact fast paths for `p = 1` and `p = 2`.
pub fn minkowski_distance(a: &[f64], b: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    } else if p == 2.0 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    } else {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Stored training set for k-nearest-neighbour voting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub train: Matrix,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub k: usize,
    pub p: f64,
}

fn check_params(n_train: usize, params: &KnnParams) -> Result<()> {
    if n_train == 0 {
        return Err(ClassicError::Param(
            "KNN needs a non-empty training set".into(),
        ));
    }
    if params.k == 0 || params.k > n_train {
        return Err(ClassicError::Param(format!(
            "k must lie in 1..={n_train}, got {}",
            params.k
        )));
    }
    if !(params.p >= 1.0) {
        return Err(ClassicError::Param(format!(
            "Minkowski p must be >= 1, got {}",
            params.p
        )));
    }
    Ok(())
}

impl KnnModel {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &KnnParams) -> Result<Self> {
        check_params(x.rows(), params)?;
        check_training(x, y, n_classes)?;
        Ok(Self {
            train: x.clone(),
            labels: y.to_vec(),
            n_classes,
            k: params.k,
            p: params.p,
        })
    }

    pub fn n_features(&self) -> usize {
        self.train.cols()
    }

    /// Indices and distances of the `k` nearest training rows, nearest first;
    /// equal distances resolve to the lower training index.
    fn neighbours(&self, query: &[f64]) -> Vec<(f64, usize)> {
        let mut d: Vec<(f64, usize)> = self
            .train
            .row_iter()
            .enumerate()
            .map(|(i, r)| (minkowski_distance(query, r, self.p), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_by(cmp);
        d
    }

    /// Majority label among the neighbours. A tied vote goes to the tied
    /// class with the smallest summed neighbour distance, then the lower index.
    fn vote(&self, neighbours: &[(f64, usize)]) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        let mut dist = vec![0.0f64; self.n_classes];
        for &(d, i) in neighbours {
            counts[self.labels[i]] += 1;
            dist[self.labels[i]] += d;
        }
        let top = *counts.iter().max().unwrap();
        let mut best: Option<usize> = None;
        for c in 0..self.n_classes {
            if counts[c] == top && best.is_none_or(|b| dist[c] < dist[b]) {
                best = Some(c);
            }
        }
        best.unwrap()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        x.row_iter()
            .map(|q| self.vote(&self.neighbours(q)))
            .collect()
    }

    /// Vote shares of the `k` neighbours.
    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        for (i, q) in x.row_iter().enumerate() {
            for (_, j) in self.neighbours(q) {
                out[(i, self.labels[j])] += 1.0 / self.k as f64;
            }
        }
        out
    }
}

/// Labels of `query` rows by majority vote of their `k` nearest training rows
/// under the Minkowski-`p` distance.
pub fn knn_predict(
    train_x: &Matrix,
    train_y: &[usize],
    query: &Matrix,
    k: usize,
    p: f64,
) -> Result<Vec<usize>> {
    let n_classes = train_y.iter().max().map_or(0, |&m| m + 1);
    let model = KnnModel::fit(train_x, train_y, n_classes, &KnnParams { k, p })?;
    super::check_width(query, model.n_features())?;
    Ok(model.predict(query))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xorshift64Star;

    #[test]
    fn three_four_five() {
        assert_eq!(minkowski_distance(&[0.0, 0.0], &[3.0, 4.0], 2.0), 5.0);
        assert_eq!(minkowski_distance(&[0.0, 0.0], &[3.0, 4.0], 1.0), 7.0);
        let d3 = minkowski_distance(&[0.0, 0.0], &[3.0, 4.0], 3.0);
        assert!((d3 - 91f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn one_nn_recovers_training_label() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [5.0, 5.0]]).unwrap();
        let y = [0, 1, 2];
        let q = Matrix::from_rows(&[[1.0, 1.0], [5.0, 5.0]]).unwrap();
        assert_eq!(knn_predict(&x, &y, &q, 1, 2.0).unwrap(), vec![1, 2]);
    }

    #[test]
    fn vote_tie_goes_to_nearer_class() {
        // k = 2: one neighbour of each class; class 1 is closer.
        let x = Matrix::from_rows(&[[0.0], [3.0]]).unwrap();
        let q = Matrix::from_rows(&[[2.0]]).unwrap();
        assert_eq!(knn_predict(&x, &[0, 1], &q, 2, 2.0).unwrap(), vec![1]);
        // Equidistant: lower class index.
        let q = Matrix::from_rows(&[[1.5]]).unwrap();
        assert_eq!(knn_predict(&x, &[1, 0], &q, 2, 2.0).unwrap(), vec![0]);
    }

    #[test]
    fn distance_tie_prefers_lower_training_index() {
        let x = Matrix::from_rows(&[[1.0], [-1.0]]).unwrap();
        let q = Matrix::from_rows(&[[0.0]]).unwrap();
        assert_eq!(knn_predict(&x, &[3, 2], &q, 1, 1.0).unwrap(), vec![3]);
    }

    #[test]
    fn parameter_errors() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let q = Matrix::from_rows(&[[0.0]]).unwrap();
        assert!(matches!(
            knn_predict(&x, &[0, 1], &q, 3, 2.0),
            Err(ClassicError::Param(_))
        ));
        assert!(matches!(
            knn_predict(&x, &[0, 1], &q, 1, 0.5),
            Err(ClassicError::Param(_))
        ));
        assert!(matches!(
            knn_predict(&Matrix::zeros(0, 1), &[], &q, 1, 2.0),
            Err(ClassicError::Param(_))
        ));
    }

    #[test]
    fn vote_shares_sum_to_one() {
        let mut rng = Xorshift64Star::new(1);
        let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.normal(), rng.normal()]).collect();
        let y: Vec<usize> = (0..40).map(|i| i % 3).collect();
        let m = KnnModel::fit(
            &Matrix::from_rows(&rows).unwrap(),
            &y,
            3,
            &KnnParams::default(),
        )
        .unwrap();
        let p = m.predict_proba(&Matrix::from_rows(&rows[..10]).unwrap());
        for r in p.row_iter() {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
