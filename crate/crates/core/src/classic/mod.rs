//! The seven classical classifiers behind one contract: fit on a feature
//! matrix with class indices, predict class indices, and expose per-class
//! probabilities where the model defines them.
//!
//! Hyperparameters not fixed by the study (everything except KNN's `k = 5`
//! and the forest's 10 trees) are this crate's own defaults.

mod forest;
mod knn;
mod lda;
mod logistic;
mod naive_bayes;
mod svm;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::matrix::Matrix;

pub use forest::{fit_random_forest, ForestParams, RandomForest};
pub use knn::{knn_predict, minkowski_distance, KnnModel, KnnParams};
pub use lda::{fit_lda, LdaModel, LdaParams};
pub use logistic::{fit_logistic, LogisticModel, LogisticParams};
pub use naive_bayes::{fit_naive_bayes, NaiveBayesModel, NaiveBayesParams};
pub use svm::{fit_svm, hinge_loss, SvmModel, SvmParams};
pub use tree::{entropy, fit_decision_tree, information_gain, DecisionTree, TreeNode, TreeParams};

#[derive(Debug, Error)]
pub enum ClassicError {
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("parameter error: {0}")]
    Param(String),
    #[error("shape error: expected {expected} features, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl ClassicError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ClassicError::Param(_) => ErrorCategory::Config,
            ClassicError::Numerical(_) => ErrorCategory::Numerical,
            _ => ErrorCategory::Data,
        }
    }
}

pub(crate) type Result<T> = std::result::Result<T, ClassicError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Logistic,
    Lda,
    Knn,
    NaiveBayes,
    DecisionTree,
    RandomForest,
    Svm,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::Lda => "lda",
            ClassifierKind::Knn => "knn",
            ClassifierKind::NaiveBayes => "naive_bayes",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::Svm => "svm",
        }
    }
}

/// Kind tag plus kind-specific hyperparameters. In JSON:
/// `{"kind": "knn", "k": 5, "p": 2.0}`; omitted keys take their defaults and
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassicParams {
    Logistic(LogisticParams),
    Lda(LdaParams),
    Knn(KnnParams),
    NaiveBayes(NaiveBayesParams),
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
    Svm(SvmParams),
}

impl ClassicParams {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassicParams::Logistic(_) => ClassifierKind::Logistic,
            ClassicParams::Lda(_) => ClassifierKind::Lda,
            ClassicParams::Knn(_) => ClassifierKind::Knn,
            ClassicParams::NaiveBayes(_) => ClassifierKind::NaiveBayes,
            ClassicParams::DecisionTree(_) => ClassifierKind::DecisionTree,
            ClassicParams::RandomForest(_) => ClassifierKind::RandomForest,
            ClassicParams::Svm(_) => ClassifierKind::Svm,
        }
    }

    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::Logistic => ClassicParams::Logistic(LogisticParams::default()),
            ClassifierKind::Lda => ClassicParams::Lda(LdaParams::default()),
            ClassifierKind::Knn => ClassicParams::Knn(KnnParams::default()),
            ClassifierKind::NaiveBayes => ClassicParams::NaiveBayes(NaiveBayesParams::default()),
            ClassifierKind::DecisionTree => ClassicParams::DecisionTree(TreeParams::default()),
            ClassifierKind::RandomForest => ClassicParams::RandomForest(ForestParams::default()),
            ClassifierKind::Svm => ClassicParams::Svm(SvmParams::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub params: ClassicParams,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(params: ClassicParams, seed: u64) -> Self {
        Self { params, seed }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }

    pub fn fit(&self, x: &Matrix, y: &[usize], n_classes: usize) -> Result<ClassicModel> {
        Ok(match &self.params {
            ClassicParams::Logistic(p) => ClassicModel::Logistic(fit_logistic(x, y, n_classes, p)?),
            ClassicParams::Lda(p) => ClassicModel::Lda(fit_lda(x, y, n_classes, p)?),
            ClassicParams::Knn(p) => ClassicModel::Knn(KnnModel::fit(x, y, n_classes, p)?),
            ClassicParams::NaiveBayes(p) => {
                ClassicModel::NaiveBayes(fit_naive_bayes(x, y, n_classes, p)?)
            }
            ClassicParams::DecisionTree(p) => {
                ClassicModel::DecisionTree(fit_decision_tree(x, y, n_classes, p)?)
            }
            ClassicParams::RandomForest(p) => {
                ClassicModel::RandomForest(fit_random_forest(x, y, n_classes, p, self.seed)?)
            }
            ClassicParams::Svm(p) => ClassicModel::Svm(fit_svm(x, y, n_classes, p)?),
        })
    }
}

/// Learned parameters of one of the seven classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum ClassicModel {
    Logistic(LogisticModel),
    Lda(LdaModel),
    Knn(KnnModel),
    NaiveBayes(NaiveBayesModel),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    Svm(SvmModel),
}

impl ClassicModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassicModel::Logistic(_) => ClassifierKind::Logistic,
            ClassicModel::Lda(_) => ClassifierKind::Lda,
            ClassicModel::Knn(_) => ClassifierKind::Knn,
            ClassicModel::NaiveBayes(_) => ClassifierKind::NaiveBayes,
            ClassicModel::DecisionTree(_) => ClassifierKind::DecisionTree,
            ClassicModel::RandomForest(_) => ClassifierKind::RandomForest,
            ClassicModel::Svm(_) => ClassifierKind::Svm,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            ClassicModel::Logistic(m) => m.n_features(),
            ClassicModel::Lda(m) => m.n_features(),
            ClassicModel::Knn(m) => m.n_features(),
            ClassicModel::NaiveBayes(m) => m.n_features(),
            ClassicModel::DecisionTree(m) => m.n_features(),
            ClassicModel::RandomForest(m) => m.n_features(),
            ClassicModel::Svm(m) => m.n_features(),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        check_width(x, self.n_features())?;
        Ok(match self {
            ClassicModel::Logistic(m) => m.predict(x),
            ClassicModel::Lda(m) => m.predict(x),
            ClassicModel::Knn(m) => m.predict(x),
            ClassicModel::NaiveBayes(m) => m.predict(x),
            ClassicModel::DecisionTree(m) => m.predict(x),
            ClassicModel::RandomForest(m) => m.predict(x),
            ClassicModel::Svm(m) => m.predict(x),
        })
    }

    /// Per-class probabilities, or `None` for the SVM, whose decision values
    /// are not probabilities.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Option<Matrix>> {
        check_width(x, self.n_features())?;
        Ok(match self {
            ClassicModel::Logistic(m) => Some(m.predict_proba(x)),
            ClassicModel::Lda(m) => Some(m.predict_proba(x)),
            ClassicModel::Knn(m) => Some(m.predict_proba(x)),
            ClassicModel::NaiveBayes(m) => Some(m.predict_proba(x)),
            ClassicModel::DecisionTree(m) => Some(m.predict_proba(x)),
            ClassicModel::RandomForest(m) => Some(m.predict_proba(x)),
            ClassicModel::Svm(_) => None,
        })
    }
}

pub(crate) fn check_width(x: &Matrix, expected: usize) -> Result<()> {
    if x.cols() != expected {
        return Err(ClassicError::Shape {
            expected,
            found: x.cols(),
        });
    }
    Ok(())
}

/// Validates training inputs shared by every classifier.
pub(crate) fn check_training(x: &Matrix, y: &[usize], n_classes: usize) -> Result<()> {
    if x.rows() != y.len() {
        return Err(ClassicError::Param(format!(
            "{} feature rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    if x.rows() == 0 {
        return Err(ClassicError::Param("empty training set".into()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(ClassicError::Param(format!(
            "label {bad} outside 0..{n_classes}"
        )));
    }
    if !x.is_finite() {
        return Err(ClassicError::Numerical(
            "non-finite training feature".into(),
        ));
    }
    Ok(())
}

pub(crate) fn require_two_classes(y: &[usize]) -> Result<()> {
    let first = y[0];
    if y.iter().all(|&c| c == first) {
        return Err(ClassicError::DegenerateLabels(
            "at least two distinct classes are required".into(),
        ));
    }
    Ok(())
}

pub(crate) fn class_counts(y: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    counts
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Index of the largest count; the lowest index wins ties.
pub(crate) fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &v) in counts.iter().enumerate().skip(1) {
        if v > counts[best] {
            best = i;
        }
    }
    best
}

/// In-place softmax with max-subtraction.
pub fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_json_defaults_and_unknown_keys() {
        let p: ClassicParams = serde_json::from_str(r#"{"kind":"knn"}"#).unwrap();
        assert_eq!(p, ClassicParams::Knn(KnnParams { k: 5, p: 2.0 }));
        let p: ClassicParams = serde_json::from_str(r#"{"kind":"knn","k":3}"#).unwrap();
        assert_eq!(p, ClassicParams::Knn(KnnParams { k: 3, p: 2.0 }));
        assert!(serde_json::from_str::<ClassicParams>(r#"{"kind":"knn","depth":3}"#).is_err());
        assert!(serde_json::from_str::<ClassicParams>(r#"{"kind":"boosting"}"#).is_err());
        let forest: ClassicParams = serde_json::from_str(r#"{"kind":"random_forest"}"#).unwrap();
        match forest {
            ClassicParams::RandomForest(f) => assert_eq!(f.n_trees, 10),
            _ => unreachable!(),
        }
    }

    #[test]
    fn argmax_prefers_lower_index() {
        assert_eq!(argmax(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1, 0.5, 0.5]), 1);
        assert_eq!(argmax_count(&[2, 3, 3]), 1);
    }

    #[test]
    fn softmax_closed_form() {
        let mut v = [2f64.ln(), 0.0];
        softmax_in_place(&mut v);
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((v[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn every_kind_round_trips_through_default_params() {
        for kind in [
            ClassifierKind::Logistic,
            ClassifierKind::Lda,
            ClassifierKind::Knn,
            ClassifierKind::NaiveBayes,
            ClassifierKind::DecisionTree,
            ClassifierKind::RandomForest,
            ClassifierKind::Svm,
        ] {
            let p = ClassicParams::default_for(kind);
            assert_eq!(p.kind(), kind);
            let json = serde_json::to_string(&p).unwrap();
            assert!(json.contains(&format!("\"kind\":\"{}\"", kind.name())));
            assert_eq!(serde_json::from_str::<ClassicParams>(&json).unwrap(), p);
        }
    }
}
