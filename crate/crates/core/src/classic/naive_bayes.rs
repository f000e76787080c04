use serde::{Deserialize, Serialize};

use super::{argmax, check_training, class_counts, require_two_classes, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NaiveBayesParams {
    pub var_floor: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        Self { var_floor: 1e-9 }
    }
}

/// Gaussian naive Bayes: per-class, per-feature normal densities combined
/// with class priors by Bayes' rule in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub means: Matrix,
    pub variances: Matrix,
    /// `None` for classes absent from training.
    pub log_priors: Vec<Option<f64>>,
}

pub fn fit_naive_bayes(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    params: &NaiveBayesParams,
) -> Result<NaiveBayesModel> {
    check_training(x, y, n_classes)?;
    require_two_classes(y)?;
    let (n, d) = x.shape();
    let counts = class_counts(y, n_classes);
    let mut means = Matrix::zeros(n_classes, d);
    for (row, &c) in x.row_iter().zip(y) {
        for (m, &v) in means.row_mut(c).iter_mut().zip(row) {
            *m += v;
        }
    }
    for c in 0..n_classes {
        if counts[c] > 0 {
            let k = counts[c] as f64;
            means.row_mut(c).iter_mut().for_each(|m| *m /= k);
        }
    }
    let mut variances = Matrix::zeros(n_classes, d);
    for (row, &c) in x.row_iter().zip(y) {
        for j in 0..d {
            let dv = row[j] - means[(c, j)];
            variances[(c, j)] += dv * dv;
        }
    }
    for c in 0..n_classes {
        let k = counts[c].max(1) as f64;
        for v in variances.row_mut(c) {
            *v = (*v / k).max(params.var_floor);
        }
    }
    let log_priors = counts
        .iter()
        .map(|&k| (k > 0).then(|| (k as f64 / n as f64).ln()))
        .collect();
    Ok(NaiveBayesModel {
        means,
        variances,
        log_priors,
    })
}

impl NaiveBayesModel {
    pub fn n_features(&self) -> usize {
        self.means.cols()
    }

    /// Unnormalised log posterior of each class.
    pub fn log_joint(&self, row: &[f64]) -> Vec<f64> {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        self.log_priors
            .iter()
            .enumerate()
            .map(|(c, lp)| match lp {
                None => f64::NEG_INFINITY,
                Some(lp) => {
                    let mut s = *lp;
                    for (j, &x) in row.iter().enumerate() {
                        let var = self.variances[(c, j)];
                        let dv = x - self.means[(c, j)];
                        s -= 0.5 * (ln_2pi + var.ln()) + dv * dv / (2.0 * var);
                    }
                    s
                }
            })
            .collect()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        x.row_iter().map(|r| argmax(&self.log_joint(r))).collect()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.log_priors.len());
        for (i, r) in x.row_iter().enumerate() {
            let mut lj = self.log_joint(r);
            super::softmax_in_place(&mut lj);
            out.row_mut(i).copy_from_slice(&lj);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::ClassicError;
    use crate::rng::Xorshift64Star;

    fn one_d(values: &[f64]) -> Matrix {
        Matrix::from_rows(&values.iter().map(|&v| [v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn dominant_likelihood_wins() {
        let xs = [-0.1, 0.0, 0.1, 9.9, 10.0, 10.1];
        let m = fit_naive_bayes(
            &one_d(&xs),
            &[0, 0, 0, 1, 1, 1],
            2,
            &NaiveBayesParams::default(),
        )
        .unwrap();
        assert_eq!(m.predict(&one_d(&[1.0])), vec![0]);
    }

    #[test]
    fn prior_decides_identical_likelihoods() {
        // Both classes see the same values; class 1 has nine times the rows.
        let pts = [0.0, 1.0, 2.0];
        let mut xs = Vec::new();
        let mut y = Vec::new();
        for rep in 0..10 {
            for &p in &pts {
                xs.push(p);
                y.push(usize::from(rep > 0));
            }
        }
        let m = fit_naive_bayes(&one_d(&xs), &y, 2, &NaiveBayesParams::default()).unwrap();
        assert_eq!(m.predict(&one_d(&[-5.0, 1.0, 30.0])), vec![1, 1, 1]);
        let p = m.predict_proba(&one_d(&[1.0]));
        assert!((p[(0, 1)] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn posteriors_sum_to_one() {
        let mut rng = Xorshift64Star::new(6);
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|_| (0..4).map(|_| rng.normal()).collect())
            .collect();
        let y: Vec<usize> = (0..80).map(|i| i % 4).collect();
        let m = fit_naive_bayes(
            &Matrix::from_rows(&rows).unwrap(),
            &y,
            4,
            &NaiveBayesParams::default(),
        )
        .unwrap();
        let q: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..4).map(|_| rng.normal() * 10.0).collect())
            .collect();
        for r in m.predict_proba(&Matrix::from_rows(&q).unwrap()).row_iter() {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_feature_uses_variance_floor() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.1], [1.0, 5.0], [1.0, 5.2]]).unwrap();
        let m = fit_naive_bayes(&x, &[0, 0, 1, 1], 2, &NaiveBayesParams::default()).unwrap();
        assert_eq!(m.variances[(0, 0)], 1e-9);
        assert_eq!(m.predict(&x), vec![0, 0, 1, 1]);
    }

    #[test]
    fn single_class_rejected() {
        let err = fit_naive_bayes(
            &one_d(&[1.0, 2.0]),
            &[1, 1],
            2,
            &NaiveBayesParams::default(),
        );
        assert!(matches!(err, Err(ClassicError::DegenerateLabels(_))));
    }
}
