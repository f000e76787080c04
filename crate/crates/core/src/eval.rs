//! Stratified k-fold partitioning, cross-validation, and the metric suite.

use std::collections::BTreeMap;
use std::fmt::Display;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, ErrorCategory};
use crate::rng::Xorshift64Star;

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("parameter error: {0}")]
    Param(String),
    #[error("label '{0}' is not one of the known class labels")]
    Label(String),
    #[error("length mismatch: {predicted} predictions for {actual} labels")]
    Length { predicted: usize, actual: usize },
}

impl EvalError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            EvalError::Param(_) => ErrorCategory::Config,
            _ => ErrorCategory::Data,
        }
    }
}

/// Fold index of every row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn n_rows(&self) -> usize {
        self.assignments.len()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.assignments {
            s[f] += 1;
        }
        s
    }
}

/// Shuffles each class's rows with one seeded generator (classes in ascending
/// index order) and deals them round-robin. The dealing position carries over
/// from one class to the next, which keeps total fold sizes within one.
///
/// The second return value holds a warning for every class with fewer than
/// `k` rows.
pub fn stratified_k_fold(
    labels: &[usize],
    k: usize,
    seed: u64,
) -> Result<(FoldPlan, Vec<String>), EvalError> {
    if k < 2 {
        return Err(EvalError::Param(format!("k must be at least 2, got {k}")));
    }
    if k > labels.len() {
        return Err(EvalError::Param(format!(
            "k = {k} exceeds the number of rows ({})",
            labels.len()
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut rng = Xorshift64Star::new(seed);
    let mut assignments = vec![0; labels.len()];
    let mut warnings = Vec::new();
    let mut next = 0;
    for (class, mut rows) in by_class {
        if rows.len() < k {
            warnings.push(format!(
                "class {class} has {} rows, fewer than k = {k}; some folds will not contain it",
                rows.len()
            ));
        }
        rng.shuffle(&mut rows);
        for r in rows {
            assignments[r] = next;
            next = (next + 1) % k;
        }
    }
    Ok((FoldPlan { k, assignments }, warnings))
}

/// Runs `fit_and_score(fold, train_rows, test_rows)` for every fold in order
/// and collects the returned accuracies. A failing fold aborts the run with
/// its index attached.
pub fn cross_validate<F>(plan: &FoldPlan, mut fit_and_score: F) -> Result<Vec<f64>, Error>
where
    F: FnMut(usize, &[usize], &[usize]) -> Result<f64, Error>,
{
    (0..plan.k)
        .map(|fold| {
            let train = plan.train_indices(fold);
            let test = plan.test_indices(fold);
            fit_and_score(fold, &train, &test).map_err(|e| Error::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Per-fold accuracies with their mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
}

impl CvSummary {
    pub fn from_accuracies(fold_accuracies: Vec<f64>) -> Self {
        let n = fold_accuracies.len() as f64;
        let mean = fold_accuracies.iter().sum::<f64>() / n;
        let std_dev = if fold_accuracies.len() > 1 {
            (fold_accuracies
                .iter()
                .map(|a| (a - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0))
                .sqrt()
        } else {
            0.0
        };
        Self {
            fold_accuracies,
            mean,
            std_dev,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n_samples: usize,
    pub accuracy: f64,
    /// Indexed like the class labels.
    pub precision: Vec<f64>,
    /// True where a class was never predicted, so its precision is 0/0 (reported as 0).
    pub precision_undefined: Vec<bool>,
    /// Mean precision over the classes that occur in `actual`.
    pub macro_precision: f64,
    /// `confusion[i][j]` counts rows with actual class `i` predicted as `j`.
    pub confusion: Vec<Vec<usize>>,
}

fn index_of<L: PartialEq + Display>(label: &L, class_labels: &[L]) -> Result<usize, EvalError> {
    class_labels
        .iter()
        .position(|c| c == label)
        .ok_or_else(|| EvalError::Label(label.to_string()))
}

pub fn compute_metrics<L: PartialEq + Display>(
    predicted: &[L],
    actual: &[L],
    class_labels: &[L],
) -> Result<Metrics, EvalError> {
    if predicted.len() != actual.len() {
        return Err(EvalError::Length {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    if actual.is_empty() {
        return Err(EvalError::Param("metrics need at least one sample".into()));
    }
    let c = class_labels.len();
    let mut confusion = vec![vec![0usize; c]; c];
    for (p, a) in predicted.iter().zip(actual) {
        confusion[index_of(a, class_labels)?][index_of(p, class_labels)?] += 1;
    }
    let n = actual.len();
    let trace: usize = (0..c).map(|i| confusion[i][i]).sum();
    let mut precision = Vec::with_capacity(c);
    let mut precision_undefined = Vec::with_capacity(c);
    for j in 0..c {
        let col: usize = (0..c).map(|i| confusion[i][j]).sum();
        precision_undefined.push(col == 0);
        precision.push(if col == 0 {
            0.0
        } else {
            confusion[j][j] as f64 / col as f64
        });
    }
    let present: Vec<usize> = (0..c)
        .filter(|&i| confusion[i].iter().sum::<usize>() > 0)
        .collect();
    let macro_precision = present.iter().map(|&i| precision[i]).sum::<f64>() / present.len() as f64;
    Ok(Metrics {
        n_samples: n,
        accuracy: trace as f64 / n as f64,
        precision,
        precision_undefined,
        macro_precision,
        confusion,
    })
}

/// Results for one model: holdout metrics plus the cross-validation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub name: String,
    pub kind: String,
    pub holdout: Metrics,
    pub train_accuracy: f64,
    pub cross_validation: Option<CvSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub master_seed: u64,
    pub config_digest: String,
    pub timestamp: Option<String>,
    pub class_labels: Vec<String>,
    pub n_rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub cv_k: usize,
    pub selected_features: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: ReportMetadata,
    pub models: Vec<ModelReport>,
}

impl EvaluationReport {
    /// Canonical JSON: sorted keys, reals to 17 significant digits.
    pub fn to_json(&self) -> String {
        crate::json::to_canonical_string(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            offset: crate::json::byte_offset(text, &e),
            message: e.to_string(),
        })
    }

    /// One row per model per fold, then holdout, train, CV mean and CV
    /// standard deviation rows.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "model",
            "kind",
            "row",
            "fold",
            "accuracy",
            "macro_precision",
        ])
        .unwrap();
        let real = |v: f64| format!("{v:.17}");
        for m in &self.models {
            if let Some(cv) = &m.cross_validation {
                for (f, a) in cv.fold_accuracies.iter().enumerate() {
                    w.write_record([&m.name, &m.kind, "fold", &f.to_string(), &real(*a), ""])
                        .unwrap();
                }
            }
            let hp = real(m.holdout.macro_precision);
            w.write_record([
                &m.name,
                &m.kind,
                "holdout",
                "",
                &real(m.holdout.accuracy),
                &hp,
            ])
            .unwrap();
            w.write_record([&m.name, &m.kind, "train", "", &real(m.train_accuracy), ""])
                .unwrap();
            if let Some(cv) = &m.cross_validation {
                w.write_record([&m.name, &m.kind, "cv_mean", "", &real(cv.mean), ""])
                    .unwrap();
                w.write_record([&m.name, &m.kind, "cv_std", "", &real(cv.std_dev), ""])
                    .unwrap();
            }
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_divisibility_gives_identical_folds() {
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i >= 60)).collect();
        let (plan, warnings) = stratified_k_fold(&labels, DEFAULT_FOLDS, 3).unwrap();
        assert!(warnings.is_empty());
        for f in 0..10 {
            let test = plan.test_indices(f);
            let a = test.iter().filter(|&&i| labels[i] == 0).count();
            assert_eq!((a, test.len() - a), (6, 4));
        }
        assert_eq!(plan, stratified_k_fold(&labels, 10, 3).unwrap().0);
        assert_ne!(plan, stratified_k_fold(&labels, 10, 4).unwrap().0);
    }

    #[test]
    fn small_class_warns_and_k_too_large_fails() {
        let labels = [0, 0, 0, 0, 1, 1, 1, 1, 1, 2];
        let (_, w) = stratified_k_fold(&labels, 3, 0).unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("class 2"));
        assert!(matches!(
            stratified_k_fold(&labels, 11, 0),
            Err(EvalError::Param(_))
        ));
        assert!(matches!(
            stratified_k_fold(&labels, 1, 0),
            Err(EvalError::Param(_))
        ));
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(
            labels in proptest::collection::vec(0usize..4, 10..200),
            k in 2usize..11,
            seed in any::<u64>(),
        ) {
            prop_assume!(k <= labels.len());
            let (plan, _) = stratified_k_fold(&labels, k, seed).unwrap();
            prop_assert_eq!(plan.assignments.len(), labels.len());
            prop_assert!(plan.assignments.iter().all(|&f| f < k));
            let sizes = plan.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for c in 0..4 {
                let mut per = vec![0usize; k];
                for (i, &l) in labels.iter().enumerate() {
                    if l == c {
                        per[plan.assignments[i]] += 1;
                    }
                }
                prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
            }
        }

        #[test]
        fn metrics_invariant_under_joint_shuffle(
            pairs in proptest::collection::vec((0usize..3, 0usize..3), 1..80),
            seed in any::<u64>(),
        ) {
            let classes = [0usize, 1, 2];
            let (p, a): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
            let m1 = compute_metrics(&p, &a, &classes).unwrap();
            let mut shuffled = pairs.clone();
            Xorshift64Star::new(seed).shuffle(&mut shuffled);
            let (p2, a2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
            let m2 = compute_metrics(&p2, &a2, &classes).unwrap();
            prop_assert_eq!(&m1, &m2);
            let total: usize = m1.confusion.iter().flatten().sum();
            prop_assert_eq!(total, pairs.len());
            let trace: usize = (0..3).map(|i| m1.confusion[i][i]).sum();
            prop_assert!((m1.accuracy - trace as f64 / total as f64).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&m1.accuracy));
        }
    }

    #[test]
    fn perfect_predictions() {
        let y = ["a", "b", "c", "a"];
        let m = compute_metrics(&y, &y, &["a", "b", "c"]).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.precision, vec![1.0; 3]);
        assert_eq!(m.macro_precision, 1.0);
    }

    #[test]
    fn all_positive_binary_case() {
        let actual = ["pos", "neg", "pos", "neg"];
        let predicted = ["pos"; 4];
        let m = compute_metrics(&predicted, &actual, &["neg", "pos"]).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.precision, vec![0.0, 0.5]);
        assert_eq!(m.precision_undefined, vec![true, false]);
        assert_eq!(m.macro_precision, 0.25);
    }

    #[test]
    fn four_class_hand_counted_fixture() {
        // Confusion (rows actual, columns predicted):
        //   [4 1 0 0]
        //   [0 3 1 0]
        //   [1 0 4 1]
        //   [0 0 1 4]
        let rows: [[usize; 4]; 4] = [[4, 1, 0, 0], [0, 3, 1, 0], [1, 0, 4, 1], [0, 0, 1, 4]];
        let mut actual = Vec::new();
        let mut predicted = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            for (j, &n) in r.iter().enumerate() {
                for _ in 0..n {
                    actual.push(i);
                    predicted.push(j);
                }
            }
        }
        assert_eq!(actual.len(), 20);
        let m = compute_metrics(&predicted, &actual, &[0, 1, 2, 3]).unwrap();
        assert_eq!(m.accuracy, 15.0 / 20.0);
        let expected = [4.0 / 5.0, 3.0 / 4.0, 4.0 / 6.0, 4.0 / 5.0];
        for (p, e) in m.precision.iter().zip(expected) {
            assert!((p - e).abs() < 1e-15);
        }
        let macro_p = expected.iter().sum::<f64>() / 4.0;
        assert!((m.macro_precision - macro_p).abs() < 1e-15);
    }

    #[test]
    fn macro_precision_skips_classes_absent_from_actual() {
        let m = compute_metrics(&[0, 2, 0], &[0, 0, 0], &[0, 1, 2]).unwrap();
        assert_eq!(m.precision, vec![1.0, 0.0, 0.0]);
        assert_eq!(m.macro_precision, 1.0);
    }

    #[test]
    fn unknown_label_rejected() {
        assert!(matches!(
            compute_metrics(&["x"], &["a"], &["a", "b"]),
            Err(EvalError::Label(l)) if l == "x"
        ));
        assert!(matches!(
            compute_metrics(&[0], &[0, 1], &[0, 1]),
            Err(EvalError::Length { .. })
        ));
    }

    #[test]
    fn constant_model_scores_one_half_per_fold() {
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let (plan, _) = stratified_k_fold(&labels, 4, 9).unwrap();
        let acc = cross_validate(&plan, |_, _, test| {
            let pred = vec![0usize; test.len()];
            let actual: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
            Ok(compute_metrics(&pred, &actual, &[0, 1])?.accuracy)
        })
        .unwrap();
        assert_eq!(acc, vec![0.5; 4]);
        let s = CvSummary::from_accuracies(acc.clone());
        assert!((s.mean - acc.iter().sum::<f64>() / 4.0).abs() < 1e-12);
        assert_eq!(s.std_dev, 0.0);
    }

    #[test]
    fn fold_errors_carry_index() {
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let (plan, _) = stratified_k_fold(&labels, 5, 0).unwrap();
        let err = cross_validate(&plan, |fold, _, _| {
            if fold == 3 {
                Err(Error::Config("boom".into()))
            } else {
                Ok(1.0)
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Fold { fold: 3, .. }));
    }

    #[test]
    fn sample_standard_deviation() {
        let s = CvSummary::from_accuracies(vec![0.8, 0.9, 1.0]);
        assert!((s.mean - 0.9).abs() < 1e-12);
        assert!((s.std_dev - 0.1).abs() < 1e-12);
    }
}
