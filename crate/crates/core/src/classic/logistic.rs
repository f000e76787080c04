use serde::{Deserialize, Serialize};

use super::{argmax, check_training, require_two_classes, softmax_in_place, ClassicError, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

/// Multinomial (softmax) logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// `n_classes × n_features`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Full-batch gradient descent on mean cross-entropy plus `l2/2 · ‖W‖²`,
/// starting from all-zero parameters.
pub fn fit_logistic(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    params: &LogisticParams,
) -> Result<LogisticModel> {
    check_training(x, y, n_classes)?;
    require_two_classes(y)?;
    if !(params.learning_rate >= 0.0) || !(params.l2 >= 0.0) {
        return Err(ClassicError::Param(
            "learning_rate and l2 must be non-negative".into(),
        ));
    }
    let (n, d) = x.shape();
    let mut model = LogisticModel {
        weights: Matrix::zeros(n_classes, d),
        bias: vec![0.0; n_classes],
    };
    let mut grad_w = Matrix::zeros(n_classes, d);
    let mut grad_b = vec![0.0; n_classes];
    let mut probs = vec![0.0; n_classes];
    let inv_n = 1.0 / n as f64;
    for _ in 0..params.epochs {
        grad_w.as_mut_slice().fill(0.0);
        grad_b.fill(0.0);
        for (row, &label) in x.row_iter().zip(y) {
            model.logits_into(row, &mut probs);
            softmax_in_place(&mut probs);
            for c in 0..n_classes {
                let g = probs[c] - if c == label { 1.0 } else { 0.0 };
                grad_b[c] += g;
                for (gw, &v) in grad_w.row_mut(c).iter_mut().zip(row) {
                    *gw += g * v;
                }
            }
        }
        for c in 0..n_classes {
            let w = model.weights.row_mut(c);
            for (wj, &gj) in w.iter_mut().zip(grad_w.row(c)) {
                *wj -= params.learning_rate * (gj * inv_n + params.l2 * *wj);
            }
            model.bias[c] -= params.learning_rate * grad_b[c] * inv_n;
        }
    }
    if !model.weights.is_finite() || model.bias.iter().any(|b| !b.is_finite()) {
        return Err(ClassicError::Numerical(
            "logistic regression diverged".into(),
        ));
    }
    Ok(model)
}

impl LogisticModel {
    pub fn n_features(&self) -> usize {
        self.weights.cols()
    }

    fn logits_into(&self, row: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.bias[c] + crate::linalg::dot(self.weights.row(c), row);
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let c = self.bias.len();
        let mut out = Matrix::zeros(x.rows(), c);
        for (i, row) in x.row_iter().enumerate() {
            let p = out.row_mut(i);
            self.logits_into(row, p);
            softmax_in_place(p);
        }
        out
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        let p = self.predict_proba(x);
        p.row_iter().map(argmax).collect()
    }
}
