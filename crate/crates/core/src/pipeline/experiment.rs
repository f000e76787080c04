//! The end-to-end experiment.
//!
//! The raw table is split first; imputation, encoding, selection, scaling
//! and PCA are then fitted on the training rows alone and replayed on the
//! test rows. Cross-validation runs inside the training split and refits
//! the preprocessing in every fold, so no fit ever sees a row it is later
//! scored on.
//!
//! Models are trained on separate threads. Each thread only reads shared
//! inputs, and results are assembled in roster order, so the output is the
//! same as a sequential run.

use std::path::Path;
use std::thread;

use serde::{Deserialize, Serialize};

use super::config::{DataSource, PipelineConfig};
use super::figures::{accuracy_bar_chart, pca_scatter, PcaPoints, BAR_CHART_FILE, SCATTER_FILE};
use super::generator::generate_cohort;
use super::models::{roster, ModelSpec};
use super::persist::{write_atomic, ModelFile, TrainingMetadata};
use crate::error::{Error, Result};
use crate::eval::{
    compute_metrics, cross_validate, stratified_k_fold, CvSummary, EvaluationReport, ModelReport,
    ReportMetadata,
};
use crate::json::to_canonical_string;
use crate::matrix::Matrix;
use crate::preprocess::{pca_transform, FittedPreprocess, PreprocessState};
use crate::tabular::{load_csv, load_schema, split_indices, Table};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const PCA_POINTS_FILE: &str = "pca_points.json";
pub const FEATURE_REPORT_FILE: &str = "feature_report.json";
pub const PARTIAL_REPORT_FILE: &str = "partial_report.json";
pub const MODELS_DIR: &str = "models";

/// Everything one run produces, before anything is written.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub report: EvaluationReport,
    /// One per roster entry, in report order.
    pub models: Vec<ModelFile>,
    pub preprocess: PreprocessState,
    pub pca_points: Option<PcaPoints>,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Written instead of a report when a stage fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialReport {
    pub failed_stage: String,
    pub error: String,
    pub metadata: Option<ReportMetadata>,
    /// Models that finished before or alongside the failure.
    pub completed: Vec<ModelReport>,
}

fn stage<T>(name: &str, result: Result<T>) -> Result<T> {
    result.map_err(|e| Error::Stage {
        stage: name.to_string(),
        source: Box::new(e),
    })
}

/// The cohort the config points at: a CSV with its schema, or a generated one.
pub fn load_table(config: &PipelineConfig) -> Result<Table> {
    match &config.data {
        DataSource::Csv { csv, schema } => {
            let schema = load_schema(schema)?;
            Ok(load_csv(csv, &schema)?)
        }
        DataSource::Generate { .. } => {
            let settings = config.generator_settings().expect("generator source");
            generate_cohort(&settings)
        }
    }
}

/// `(train, test)` row indices of `table` under the config's split seed.
pub fn split_rows(config: &PipelineConfig, n_rows: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    Ok(split_indices(
        n_rows,
        config.test_fraction,
        config.seed_for("split"),
    )?)
}

/// Preprocessing refitted on one fold's training rows, with the fold's test
/// rows transformed and their labels as text.
struct FoldData {
    fitted: FittedPreprocess,
    test_features: Matrix,
    test_labels: Vec<String>,
}

struct Shared<'a> {
    fitted: &'a FittedPreprocess,
    test_features: &'a Matrix,
    test_labels: &'a [usize],
    folds: &'a [FoldData],
    plan: Option<&'a crate::eval::FoldPlan>,
    digest: &'a str,
}

fn evaluate_model(
    name: &str,
    spec: &ModelSpec,
    shared: &Shared,
) -> Result<(ModelReport, ModelFile)> {
    let fitted = shared.fitted;
    let n_classes = fitted.state.class_labels.len();
    let model = stage(
        &format!("train/{name}"),
        spec.fit(&fitted.features, &fitted.labels, n_classes),
    )?;
    let (holdout, train_accuracy) = stage(
        &format!("evaluate/{name}"),
        (|| {
            let predicted = model.predict(shared.test_features)?;
            let classes: Vec<usize> = (0..n_classes).collect();
            let holdout = compute_metrics(&predicted, shared.test_labels, &classes)?;
            let on_train = model.predict(&fitted.features)?;
            let train = compute_metrics(&on_train, &fitted.labels, &classes)?;
            Ok((holdout, train.accuracy))
        })(),
    )?;
    let cross_validation = match shared.plan {
        None => None,
        Some(plan) => {
            let accuracies = stage(
                &format!("cross_validate/{name}"),
                cross_validate(plan, |fold, _, _| {
                    let data = &shared.folds[fold];
                    let f = &data.fitted;
                    let m = spec.fit(&f.features, &f.labels, f.state.class_labels.len())?;
                    let predicted = m.predict(&data.test_features)?;
                    let correct = predicted
                        .iter()
                        .zip(&data.test_labels)
                        .filter(|(&p, actual)| &f.state.class_labels[p] == *actual)
                        .count();
                    Ok(correct as f64 / data.test_labels.len() as f64)
                }),
            )?;
            Some(CvSummary::from_accuracies(accuracies))
        }
    };
    let report = ModelReport {
        name: name.to_string(),
        kind: model.kind_name().to_string(),
        holdout,
        train_accuracy,
        cross_validation,
    };
    let file = ModelFile::new(
        name,
        model,
        fitted.state.clone(),
        TrainingMetadata::new(spec.seed(), shared.digest),
    );
    Ok((report, file))
}

/// A failed run: the error plus whatever finished.
#[derive(Debug)]
pub struct Failure {
    pub error: Error,
    pub partial: Box<PartialReport>,
}

fn fail(error: Error, metadata: Option<ReportMetadata>, completed: Vec<ModelReport>) -> Failure {
    let failed_stage = match &error {
        Error::Stage { stage, .. } => stage.clone(),
        _ => "unknown".to_string(),
    };
    Failure {
        partial: Box::new(PartialReport {
            failed_stage,
            error: error.to_string(),
            metadata,
            completed,
        }),
        error,
    }
}

/// Runs the experiment on `table` without touching the file system.
pub fn evaluate(
    config: &PipelineConfig,
    table: &Table,
) -> std::result::Result<ExperimentResult, Failure> {
    let (train_rows, test_rows) =
        stage("split", split_rows(config, table.n_rows())).map_err(|e| fail(e, None, vec![]))?;
    let train = table.select_rows(&train_rows);
    let test = table.select_rows(&test_rows);
    let fitted = stage(
        "preprocess",
        PreprocessState::fit(&train, &config.preprocess),
    )
    .map_err(|e| fail(e, None, vec![]))?;
    let state = &fitted.state;
    let (test_features, test_labels) = stage(
        "preprocess",
        state
            .transform(&test)
            .and_then(|x| Ok((x, state.transform_labels(&test)?))),
    )
    .map_err(|e| fail(e, None, vec![]))?;

    let mut metadata = ReportMetadata {
        master_seed: config.master_seed,
        config_digest: config.digest(),
        timestamp: None,
        class_labels: state.class_labels.clone(),
        n_rows: table.n_rows(),
        n_train: train_rows.len(),
        n_test: test_rows.len(),
        cv_k: config.cv_k,
        selected_features: state.selected_features.clone(),
        warnings: Vec::new(),
    };

    let (plan, folds) = if config.cv_k >= 2 {
        let (plan, warnings) = stage(
            "folds",
            stratified_k_fold(&fitted.labels, config.cv_k, config.seed_for("folds"))
                .map_err(Error::from),
        )
        .map_err(|e| fail(e, Some(metadata.clone()), vec![]))?;
        metadata.warnings.extend(warnings);
        let folds = (0..plan.k)
            .map(|fold| {
                let prepare = || -> Result<FoldData> {
                    let fold_train = train.select_rows(&plan.train_indices(fold));
                    let fold_test = train.select_rows(&plan.test_indices(fold));
                    let fitted = PreprocessState::fit(&fold_train, &config.preprocess)?;
                    let test_features = fitted.state.transform(&fold_test)?;
                    let test_labels = fold_test
                        .categorical_values(&fitted.state.target)?
                        .iter()
                        .map(|v| v.clone().unwrap_or_default())
                        .collect();
                    Ok(FoldData {
                        fitted,
                        test_features,
                        test_labels,
                    })
                };
                prepare().map_err(|e| Error::Fold {
                    fold,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>();
        let folds = stage("cross_validate/preprocess", folds)
            .map_err(|e| fail(e, Some(metadata.clone()), vec![]))?;
        (Some(plan), folds)
    } else {
        (None, Vec::new())
    };

    let digest = metadata.config_digest.clone();
    let shared = Shared {
        fitted: &fitted,
        test_features: &test_features,
        test_labels: &test_labels,
        folds: &folds,
        plan: plan.as_ref(),
        digest: &digest,
    };
    let entries = roster(config);
    let results: Vec<Result<(ModelReport, ModelFile)>> = thread::scope(|scope| {
        let handles: Vec<_> = entries
            .iter()
            .map(|(name, spec)| {
                let shared = &shared;
                scope.spawn(move || evaluate_model(name, spec, shared))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("model thread panicked"))
            .collect()
    });

    let mut reports = Vec::new();
    let mut files = Vec::new();
    let mut first_error = None;
    for result in results {
        match result {
            Ok((r, f)) => {
                reports.push(r);
                files.push(f);
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        return Err(fail(e, Some(metadata), reports));
    }

    let report = EvaluationReport {
        metadata,
        models: reports,
    };
    let pca_points = stage(
        "figures",
        pca_points(&report, &files, &fitted.state, &test_features),
    )
    .map_err(|e| fail(e, Some(report.metadata.clone()), report.models.clone()))?;
    Ok(ExperimentResult {
        report,
        models: files,
        preprocess: fitted.state,
        pca_points,
        train_rows,
        test_rows,
    })
}

/// Test rows in PCA coordinates, colored by the model with the best holdout
/// accuracy (earliest in the roster on ties).
fn pca_points(
    report: &EvaluationReport,
    files: &[ModelFile],
    state: &PreprocessState,
    test_features: &Matrix,
) -> Result<Option<PcaPoints>> {
    let Some(pca) = &state.pca else {
        return Ok(None);
    };
    let mut best = 0;
    for (i, m) in report.models.iter().enumerate() {
        if m.holdout.accuracy > report.models[best].holdout.accuracy {
            best = i;
        }
    }
    Ok(Some(PcaPoints {
        model: report.models[best].name.clone(),
        class_labels: state.class_labels.clone(),
        points: pca_transform(test_features, pca)?,
        predicted: files[best].model.predict(test_features)?,
        explained_variance_ratio: pca.explained_variance_ratio(),
    }))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    write_atomic(&dir.join(name), text.as_bytes())
}

/// Writes the report, figures, PCA points, feature report and model files.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    write_text(dir, REPORT_JSON, &result.report.to_json())?;
    write_text(dir, REPORT_CSV, &result.report.to_csv())?;
    write_text(
        dir,
        FEATURE_REPORT_FILE,
        &to_canonical_string(&result.preprocess.feature_report).expect("feature report serializes"),
    )?;
    if let Some(points) = &result.pca_points {
        write_text(
            dir,
            PCA_POINTS_FILE,
            &to_canonical_string(points).expect("points serialize"),
        )?;
    }
    write_figures(&result.report, result.pca_points.as_ref(), dir)?;
    for file in &result.models {
        write_text(
            &dir.join(MODELS_DIR),
            &format!("{}.json", file.name),
            &file.to_json(),
        )?;
    }
    Ok(())
}

pub fn write_figures(
    report: &EvaluationReport,
    points: Option<&PcaPoints>,
    dir: &Path,
) -> Result<()> {
    write_text(dir, BAR_CHART_FILE, &accuracy_bar_chart(report))?;
    if let Some(points) = points {
        write_text(dir, SCATTER_FILE, &pca_scatter(points))?;
    }
    Ok(())
}

/// Rebuilds both figures from `report.json` and `pca_points.json` in `dir`.
pub fn reemit_figures(dir: &Path) -> Result<()> {
    let read = |name: &str| {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|e| Error::io(path, e))
    };
    let report = EvaluationReport::from_json(&read(REPORT_JSON)?)?;
    let points = if dir.join(PCA_POINTS_FILE).exists() {
        let text = read(PCA_POINTS_FILE)?;
        let points: PcaPoints = serde_json::from_str(&text).map_err(|e| Error::Format {
            offset: crate::json::byte_offset(&text, &e),
            message: e.to_string(),
        })?;
        Some(points)
    } else {
        None
    };
    write_figures(&report, points.as_ref(), dir)
}

/// Loads the data, runs the experiment and writes everything under `out`.
/// On failure `partial_report.json` records the stage and what finished.
pub fn run_experiment(config: &PipelineConfig, out: &Path) -> Result<EvaluationReport> {
    let outcome = stage("load", load_table(config))
        .map_err(|e| fail(e, None, vec![]))
        .and_then(|table| evaluate(config, &table));
    match outcome {
        Ok(result) => {
            stage("write", write_outputs(&result, out))?;
            Ok(result.report)
        }
        Err(failure) => {
            let text = to_canonical_string(&failure.partial).expect("partial report serializes");
            write_text(out, PARTIAL_REPORT_FILE, &text)?;
            Err(failure.error)
        }
    }
}

/// Fits the preprocessing and one named roster model on the training split.
pub fn train_one(config: &PipelineConfig, table: &Table, name: &str) -> Result<ModelFile> {
    let entries = roster(config);
    let (_, spec) = entries.iter().find(|(n, _)| n == name).ok_or_else(|| {
        let names: Vec<&str> = entries.iter().map(|(n, _)| n.as_str()).collect();
        Error::Config(format!(
            "model '{name}' is not in the roster ({})",
            names.join(", ")
        ))
    })?;
    let (train_rows, _) = split_rows(config, table.n_rows())?;
    let fitted = stage(
        "preprocess",
        PreprocessState::fit(&table.select_rows(&train_rows), &config.preprocess),
    )?;
    let model = stage(
        &format!("train/{name}"),
        spec.fit(
            &fitted.features,
            &fitted.labels,
            fitted.state.class_labels.len(),
        ),
    )?;
    Ok(ModelFile::new(
        name,
        model,
        fitted.state,
        TrainingMetadata::new(spec.seed(), config.digest()),
    ))
}
