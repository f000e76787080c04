//! Prediction for a single patient from a saved model file.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::persist::ModelFile;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tabular::TabularError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub model: String,
    pub medication: String,
    pub class_index: usize,
    /// Keyed by class label; absent for the SVM.
    pub probabilities: Option<BTreeMap<String, f64>>,
}

/// Replays the stored preprocessing on one raw record and predicts.
pub fn predict_patient(file: &ModelFile, record: &HashMap<String, String>) -> Result<Prediction> {
    let features = file.preprocess.transform_record(record)?;
    let x = Matrix::from_rows(&[features]).expect("one row");
    let class_index = file.model.predict(&x)?[0];
    let probabilities = file.model.predict_proba(&x)?.map(|p| {
        file.class_labels
            .iter()
            .cloned()
            .zip(p.row(0).iter().copied())
            .collect()
    });
    Ok(Prediction {
        model: file.name.clone(),
        medication: file.class_labels[class_index].clone(),
        class_index,
        probabilities,
    })
}

/// `name=value` pairs into a record. The value may be empty; the name may not.
pub fn parse_assignments<S: AsRef<str>>(pairs: &[S]) -> Result<HashMap<String, String>> {
    let mut record = HashMap::new();
    for pair in pairs {
        let pair = pair.as_ref();
        let (k, v) = pair
            .split_once('=')
            .filter(|(k, _)| !k.trim().is_empty())
            .ok_or_else(|| Error::Config(format!("expected name=value, got '{pair}'")))?;
        if record
            .insert(k.trim().to_string(), v.trim().to_string())
            .is_some()
        {
            return Err(Error::Config(format!("'{}' given twice", k.trim())));
        }
    }
    Ok(record)
}

/// A CSV with a header and exactly one data row, as a record.
pub fn read_single_row(path: impl AsRef<Path>) -> Result<HashMap<String, String>> {
    let path = path.as_ref();
    let bad = |message: String| TabularError::Csv(format!("{}: {message}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let mut rows = reader.records();
    let row = rows
        .next()
        .ok_or_else(|| bad("no data row".into()))?
        .map_err(|e| bad(e.to_string()))?;
    if rows.next().is_some() {
        return Err(bad("expected exactly one data row".into()).into());
    }
    Ok(header
        .iter()
        .zip(row.iter())
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::{ClassicParams, ClassifierKind, ClassifierSpec, KnnParams};
    use crate::pipeline::generator::{generate_cohort, GeneratorSettings, BMI};
    use crate::pipeline::models::ModelSpec;
    use crate::pipeline::persist::TrainingMetadata;
    use crate::preprocess::{PreprocessOptions, PreprocessState};
    use crate::tabular::{Column, Table};

    fn record_of(table: &Table, i: usize) -> HashMap<String, String> {
        table
            .schema()
            .iter()
            .zip(table.columns())
            .map(|(s, c)| {
                let v = match c {
                    Column::Numeric(v) => v[i].map(|x| x.to_string()).unwrap_or_default(),
                    Column::Categorical(v) => v[i].clone().unwrap_or_default(),
                };
                (s.name.clone(), v)
            })
            .collect()
    }

    fn fit(table: &Table, spec: ModelSpec) -> ModelFile {
        let fitted = PreprocessState::fit(table, &PreprocessOptions::default()).unwrap();
        let model = spec
            .fit(
                &fitted.features,
                &fitted.labels,
                fitted.state.class_labels.len(),
            )
            .unwrap();
        ModelFile::new("m", model, fitted.state, TrainingMetadata::new(0, ""))
    }

    fn cohort() -> Table {
        generate_cohort(&GeneratorSettings {
            n_rows: 400,
            noise_rate: 0.05,
            seed: 17,
        })
        .unwrap()
    }

    #[test]
    fn one_nn_returns_training_label() {
        let table = cohort();
        let knn = ModelSpec::Classic(ClassifierSpec::new(
            ClassicParams::Knn(KnnParams { k: 1, p: 2.0 }),
            0,
        ));
        let file = fit(&table, knn);
        let labels = table.categorical_values("Medications").unwrap();
        let mut agree = 0;
        for i in 0..50 {
            let p = predict_patient(&file, &record_of(&table, i)).unwrap();
            agree += usize::from(Some(p.medication.as_str()) == labels[i].as_deref());
            let probs = p.probabilities.unwrap();
            assert!((probs.values().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        // Exact duplicates in the selected features may carry other labels.
        assert!(agree >= 48, "{agree}");
    }

    #[test]
    fn missing_feature_is_named() {
        let table = cohort();
        let tree = ClassicParams::default_for(ClassifierKind::DecisionTree);
        let file = fit(&table, ModelSpec::Classic(ClassifierSpec::new(tree, 0)));
        let mut record = record_of(&table, 0);
        record.remove(BMI);
        match predict_patient(&file, &record) {
            Err(Error::MissingFeatures(names)) => assert_eq!(names, vec![BMI.to_string()]),
            other => panic!("expected missing features, got {other:?}"),
        }
    }

    #[test]
    fn assignments_parse() {
        let r = parse_assignments(&["BMI=31.5", "Sex = Male", "Blood Pressure="]).unwrap();
        assert_eq!(r["BMI"], "31.5");
        assert_eq!(r["Sex"], "Male");
        assert_eq!(r["Blood Pressure"], "");
        assert!(parse_assignments(&["novalue"]).is_err());
        assert!(parse_assignments(&["=3"]).is_err());
        assert!(parse_assignments(&["a=1", "a=2"]).is_err());
    }

    #[test]
    fn single_row_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("row.csv");
        std::fs::write(&path, "BMI,Sex\n31.5,Male\n").unwrap();
        let r = read_single_row(&path).unwrap();
        assert_eq!(r["Sex"], "Male");
        std::fs::write(&path, "BMI,Sex\n31.5,Male\n20,Female\n").unwrap();
        assert!(read_single_row(&path).is_err());
        std::fs::write(&path, "BMI,Sex\n").unwrap();
        assert!(read_single_row(&path).is_err());
    }
}
