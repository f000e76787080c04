use serde::{Deserialize, Serialize};

use super::{
    argmax, check_training, class_counts, require_two_classes, softmax_in_place, ClassicError,
    Result,
};
use crate::linalg::{cholesky, cholesky_solve, dot};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaParams {
    /// Ridge added to the pooled covariance diagonal.
    pub regularization: f64,
}

impl Default for LdaParams {
    fn default() -> Self {
        Self {
            regularization: 1e-6,
        }
    }
}

/// Linear discriminant analysis with a shared pooled covariance.
///
/// The score of class `c` is `xᵀΣ⁻¹μ_c − ½μ_cᵀΣ⁻¹μ_c + ln π_c`, stored as a
/// coefficient row and an intercept. Classes absent from training get an
/// intercept of `-inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub means: Matrix,
    pub priors: Vec<f64>,
    pub coefficients: Matrix,
    pub intercepts: Vec<Option<f64>>,
}

pub fn fit_lda(x: &Matrix, y: &[usize], n_classes: usize, params: &LdaParams) -> Result<LdaModel> {
    check_training(x, y, n_classes)?;
    require_two_classes(y)?;
    let counts = class_counts(y, n_classes);
    if let Some(c) = counts.iter().position(|&k| k == 1) {
        return Err(ClassicError::DegenerateLabels(format!(
            "class {c} has a single sample; LDA needs at least 2 per class"
        )));
    }
    let (n, d) = x.shape();
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
    let present = counts.iter().filter(|&&k| k > 0).count();
    let mut cov = Matrix::zeros(d, d);
    let mut dev = vec![0.0; d];
    for (row, &c) in x.row_iter().zip(y) {
        for ((dv, &v), &m) in dev.iter_mut().zip(row).zip(means.row(c)) {
            *dv = v - m;
        }
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += dev[i] * dev[j];
            }
        }
    }
    let denom = (n - present) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
        cov[(i, i)] += params.regularization;
    }
    let chol = cholesky(&cov).ok_or_else(|| {
        ClassicError::Numerical("pooled covariance is singular after regularization".into())
    })?;

    let priors: Vec<f64> = counts.iter().map(|&k| k as f64 / n as f64).collect();
    let mut coefficients = Matrix::zeros(n_classes, d);
    let mut intercepts = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        if counts[c] == 0 {
            intercepts.push(None);
            continue;
        }
        let coef = cholesky_solve(&chol, means.row(c));
        intercepts.push(Some(-0.5 * dot(means.row(c), &coef) + priors[c].ln()));
        coefficients.row_mut(c).copy_from_slice(&coef);
    }
    Ok(LdaModel {
        means,
        priors,
        coefficients,
        intercepts,
    })
}

impl LdaModel {
    pub fn n_features(&self) -> usize {
        self.means.cols()
    }

    /// Linear discriminant score of every class for one row.
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        self.intercepts
            .iter()
            .enumerate()
            .map(|(c, b)| match b {
                Some(b) => dot(self.coefficients.row(c), row) + b,
                None => f64::NEG_INFINITY,
            })
            .collect()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        x.row_iter().map(|r| argmax(&self.scores(r))).collect()
    }

    /// Posterior class probabilities (softmax of the discriminant scores).
    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.priors.len());
        for (i, r) in x.row_iter().enumerate() {
            let mut s = self.scores(r);
            softmax_in_place(&mut s);
            out.row_mut(i).copy_from_slice(&s);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xorshift64Star;

    fn one_d(values: &[f64]) -> Matrix {
        Matrix::from_rows(&values.iter().map(|&v| [v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn symmetric_classes_split_at_zero() {
        // Mirror-image samples around -1 and +1, equal class sizes.
        let mut rng = Xorshift64Star::new(8);
        let offsets: Vec<f64> = (0..50).map(|_| rng.normal() * 0.5).collect();
        let mut xs = Vec::new();
        let mut y = Vec::new();
        for &o in &offsets {
            xs.push(-1.0 + o);
            y.push(0);
        }
        for &o in &offsets {
            xs.push(1.0 - o);
            y.push(1);
        }
        let m = fit_lda(&one_d(&xs), &y, 2, &LdaParams::default()).unwrap();
        // Bisection on the sign change of the score difference.
        let diff = |x: f64| {
            let s = m.scores(&[x]);
            s[1] - s[0]
        };
        let (mut lo, mut hi) = (-2.0, 2.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if diff(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!(lo.abs() < 0.1, "boundary at {lo}");
    }

    #[test]
    fn identical_class_data_falls_back_to_prior() {
        let pts = [0.1, 0.5, 0.9];
        let mut xs = Vec::new();
        let mut y = Vec::new();
        for _ in 0..3 {
            for &p in &pts {
                xs.push(p);
                y.push(1);
            }
        }
        for &p in &pts {
            xs.push(p);
            y.push(0);
        }
        let m = fit_lda(&one_d(&xs), &y, 2, &LdaParams::default()).unwrap();
        assert_eq!(m.predict(&one_d(&[-3.0, 0.5, 4.0])), vec![1, 1, 1]);
    }

    #[test]
    fn constant_shift_leaves_score_differences() {
        let mut rng = Xorshift64Star::new(12);
        let y: Vec<usize> = (0..90).map(|i| i % 3).collect();
        let rows: Vec<Vec<f64>> = y
            .iter()
            .map(|&c| vec![c as f64 + rng.normal(), rng.normal() - c as f64])
            .collect();
        let shifted: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|v| v + 3.5).collect())
            .collect();
        let m1 = fit_lda(
            &Matrix::from_rows(&rows).unwrap(),
            &y,
            3,
            &LdaParams::default(),
        )
        .unwrap();
        let m2 = fit_lda(
            &Matrix::from_rows(&shifted).unwrap(),
            &y,
            3,
            &LdaParams::default(),
        )
        .unwrap();
        for _ in 0..20 {
            let q = [rng.normal() * 2.0, rng.normal() * 2.0];
            let q2 = [q[0] + 3.5, q[1] + 3.5];
            let (s1, s2) = (m1.scores(&q), m2.scores(&q2));
            for c in 1..3 {
                assert!(((s1[c] - s1[0]) - (s2[c] - s2[0])).abs() < 1e-8);
            }
            assert_eq!(argmax(&s1), argmax(&s2));
        }
    }

    #[test]
    fn singleton_class_rejected() {
        let err = fit_lda(
            &one_d(&[0.0, 1.0, 2.0]),
            &[0, 0, 1],
            2,
            &LdaParams::default(),
        );
        assert!(matches!(err, Err(ClassicError::DegenerateLabels(_))));
    }

    #[test]
    fn singular_covariance_is_numerical_error() {
        // A constant feature has zero pooled variance; without a ridge it is singular.
        let x = one_d(&[1.0, 1.0, 1.0, 1.0]);
        let err = fit_lda(
            &x,
            &[0, 0, 1, 1],
            2,
            &LdaParams {
                regularization: 0.0,
            },
        );
        assert!(matches!(err, Err(ClassicError::Numerical(_))));
    }
}
