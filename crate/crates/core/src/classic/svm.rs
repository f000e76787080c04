use serde::{Deserialize, Serialize};

use super::{argmax, check_training, require_two_classes, ClassicError, Result};
use crate::linalg::dot;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 200,
        }
    }
}

/// `max(0, 1 − margin)` where `margin = y · f(x)` with `y ∈ {−1, +1}`.
pub fn hinge_loss(margin: f64) -> f64 {
    (1.0 - margin).max(0.0)
}

/// One-vs-rest linear SVM: one weight row and bias per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Full-batch sub-gradient descent on
/// `λ/2 · ‖w̃‖² + mean hinge(y · w̃·x̃)` with step `1/(λt)`, where `x̃` appends
/// a constant 1 so the bias is learned (and regularised) with the weights.
fn fit_binary(x: &Matrix, targets: &[f64], params: &SvmParams) -> Vec<f64> {
    let (n, d) = x.shape();
    let mut w = vec![0.0; d + 1];
    let mut step = vec![0.0; d + 1];
    for t in 1..=params.epochs {
        step.fill(0.0);
        for (row, &yi) in x.row_iter().zip(targets) {
            let score = dot(&w[..d], row) + w[d];
            if yi * score < 1.0 {
                for (s, &v) in step.iter_mut().zip(row) {
                    *s += yi * v;
                }
                step[d] += yi;
            }
        }
        let eta = 1.0 / (params.lambda * t as f64);
        let shrink = 1.0 - eta * params.lambda;
        for (wj, sj) in w.iter_mut().zip(&step) {
            *wj = shrink * *wj + eta * sj / n as f64;
        }
    }
    w
}

pub fn fit_svm(x: &Matrix, y: &[usize], n_classes: usize, params: &SvmParams) -> Result<SvmModel> {
    check_training(x, y, n_classes)?;
    require_two_classes(y)?;
    if !(params.lambda > 0.0) {
        return Err(ClassicError::Param(format!(
            "lambda must be positive, got {}",
            params.lambda
        )));
    }
    let d = x.cols();
    let mut weights = Matrix::zeros(n_classes, d);
    let mut bias = vec![0.0; n_classes];
    for c in 0..n_classes {
        let targets: Vec<f64> = y.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
        let w = fit_binary(x, &targets, params);
        weights.row_mut(c).copy_from_slice(&w[..d]);
        bias[c] = w[d];
    }
    if !weights.is_finite() {
        return Err(ClassicError::Numerical("SVM weights are not finite".into()));
    }
    Ok(SvmModel { weights, bias })
}

impl SvmModel {
    pub fn n_features(&self) -> usize {
        self.weights.cols()
    }

    /// `w_c · x + b_c` for every class.
    pub fn decision_values(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.bias.len());
        for (i, r) in x.row_iter().enumerate() {
            for (c, o) in out.row_mut(i).iter_mut().enumerate() {
                *o = dot(self.weights.row(c), r) + self.bias[c];
            }
        }
        out
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        self.decision_values(x).row_iter().map(argmax).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair_boundary_at_zero() {
        let x = Matrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        let m = fit_svm(&x, &[0, 1], 2, &SvmParams::default()).unwrap();
        // Boundary where the two decision values meet.
        let boundary = (m.bias[0] - m.bias[1]) / (m.weights[(1, 0)] - m.weights[(0, 0)]);
        assert!(boundary.abs() < 0.05, "boundary at {boundary}");
        assert_eq!(m.predict(&x), vec![0, 1]);
    }

    #[test]
    fn hinge_is_zero_beyond_unit_margin() {
        for m in [1.0, 1.5, 10.0] {
            assert_eq!(hinge_loss(m), 0.0);
        }
        assert_eq!(hinge_loss(0.0), 1.0);
        assert_eq!(hinge_loss(-2.0), 3.0);
    }

    #[test]
    fn decision_values_change_sign_across_separable_boundary() {
        // Class 1 above the line x0 + x1 = 1, class 0 below, gap 0.4.
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                let (a, b) = (i as f64 / 5.0, j as f64 / 5.0);
                let s = a + b - 1.0;
                if s.abs() < 0.2 {
                    continue;
                }
                rows.push([a, b]);
                y.push(usize::from(s > 0.0));
            }
        }
        let m = fit_svm(
            &Matrix::from_rows(&rows).unwrap(),
            &y,
            2,
            &SvmParams::default(),
        )
        .unwrap();
        let grid: Vec<[f64; 2]> = (0..=20)
            .flat_map(|i| (0..=20).map(move |j| [i as f64 / 20.0, j as f64 / 20.0]))
            .collect();
        let dv = m.decision_values(&Matrix::from_rows(&grid).unwrap());
        let margin = |k: usize| dv[(k, 1)] - dv[(k, 0)];
        // Far corners of the grid fall on opposite sides.
        assert!(margin(0) < 0.0);
        assert!(margin(grid.len() - 1) > 0.0);
        let mut neg = 0;
        let mut pos = 0;
        for k in 0..grid.len() {
            if margin(k) > 0.0 {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        assert!(neg > 0 && pos > 0);
        assert_eq!(m.predict(&Matrix::from_rows(&rows).unwrap()), y);
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(matches!(
            fit_svm(&x, &[1, 1], 2, &SvmParams::default()),
            Err(ClassicError::DegenerateLabels(_))
        ));
    }
}
