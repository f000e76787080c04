//! The eight trainable models behind one type, and the roster a config
//! describes.

use serde::{Deserialize, Serialize};

use super::config::{AnnSettings, PipelineConfig, ANN_NAME};
use crate::classic::{
    ClassicModel, ClassifierSpec, DecisionTree, KnnModel, LdaModel, LogisticModel, NaiveBayesModel,
    RandomForest, SvmModel,
};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::neural::{
    self, init_network, loss_and_gradients, one_hot, NetworkConfig, NetworkParams,
};
use crate::rng::derive_seed;

/// A trained network together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnModel {
    /// Configuration of the kept restart, including its seed.
    pub config: NetworkConfig,
    pub params: NetworkParams,
    /// Per-epoch training loss of the kept restart.
    pub losses: Vec<f64>,
    pub restart: usize,
    /// Full training-set loss of every restart, in order.
    pub restart_losses: Vec<f64>,
}

impl AnnModel {
    /// Trains `settings.restarts` networks with seeds `derive_seed(seed, r)`
    /// and keeps the one with the lowest final loss on the whole training
    /// set. Ties go to the earlier restart.
    pub fn fit(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        settings: &AnnSettings,
        seed: u64,
    ) -> Result<Self> {
        let targets = one_hot(y, n_classes);
        let mut best: Option<(usize, NetworkConfig, neural::TrainOutcome)> = None;
        let mut restart_losses: Vec<f64> = Vec::with_capacity(settings.restarts);
        for r in 0..settings.restarts.max(1) {
            let config = settings.network_config(x.cols(), n_classes, derive_seed(seed, r as u64));
            let outcome = neural::train(init_network(&config)?, x, &targets, &config)?;
            let (loss, _) = loss_and_gradients(&outcome.params, x, &targets)?;
            if best
                .as_ref()
                .is_none_or(|(b, _, _)| loss < restart_losses[*b])
            {
                best = Some((r, config, outcome));
            }
            restart_losses.push(loss);
        }
        let (restart, config, outcome) = best.expect("at least one restart");
        Ok(AnnModel {
            config,
            params: outcome.params,
            losses: outcome.losses,
            restart,
            restart_losses,
        })
    }
}

/// Any of the seven classifiers or the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TaggedModel", from = "TaggedModel")]
pub enum TrainedModel {
    Classic(ClassicModel),
    Ann(AnnModel),
}

/// Flat serialized form: `{"kind": ..., "parameters": ...}` over all eight kinds.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
enum TaggedModel {
    Logistic(LogisticModel),
    Lda(LdaModel),
    Knn(KnnModel),
    NaiveBayes(NaiveBayesModel),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    Svm(SvmModel),
    Ann(AnnModel),
}

impl From<TrainedModel> for TaggedModel {
    fn from(m: TrainedModel) -> Self {
        match m {
            TrainedModel::Classic(ClassicModel::Logistic(m)) => TaggedModel::Logistic(m),
            TrainedModel::Classic(ClassicModel::Lda(m)) => TaggedModel::Lda(m),
            TrainedModel::Classic(ClassicModel::Knn(m)) => TaggedModel::Knn(m),
            TrainedModel::Classic(ClassicModel::NaiveBayes(m)) => TaggedModel::NaiveBayes(m),
            TrainedModel::Classic(ClassicModel::DecisionTree(m)) => TaggedModel::DecisionTree(m),
            TrainedModel::Classic(ClassicModel::RandomForest(m)) => TaggedModel::RandomForest(m),
            TrainedModel::Classic(ClassicModel::Svm(m)) => TaggedModel::Svm(m),
            TrainedModel::Ann(m) => TaggedModel::Ann(m),
        }
    }
}

impl From<TaggedModel> for TrainedModel {
    fn from(m: TaggedModel) -> Self {
        match m {
            TaggedModel::Logistic(m) => TrainedModel::Classic(ClassicModel::Logistic(m)),
            TaggedModel::Lda(m) => TrainedModel::Classic(ClassicModel::Lda(m)),
            TaggedModel::Knn(m) => TrainedModel::Classic(ClassicModel::Knn(m)),
            TaggedModel::NaiveBayes(m) => TrainedModel::Classic(ClassicModel::NaiveBayes(m)),
            TaggedModel::DecisionTree(m) => TrainedModel::Classic(ClassicModel::DecisionTree(m)),
            TaggedModel::RandomForest(m) => TrainedModel::Classic(ClassicModel::RandomForest(m)),
            TaggedModel::Svm(m) => TrainedModel::Classic(ClassicModel::Svm(m)),
            TaggedModel::Ann(m) => TrainedModel::Ann(m),
        }
    }
}

impl TrainedModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TrainedModel::Classic(m) => m.kind().name(),
            TrainedModel::Ann(_) => ANN_NAME,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Classic(m) => m.n_features(),
            TrainedModel::Ann(m) => m.params.input_dim(),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(match self {
            TrainedModel::Classic(m) => m.predict(x)?,
            TrainedModel::Ann(m) => neural::predict(&m.params, x)?,
        })
    }

    /// Per-class probabilities; `None` for the SVM.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Option<Matrix>> {
        Ok(match self {
            TrainedModel::Classic(m) => m.predict_proba(x)?,
            TrainedModel::Ann(m) => Some(neural::forward(&m.params, x)?.0),
        })
    }
}

/// How to train one roster entry.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Classic(ClassifierSpec),
    Ann { settings: AnnSettings, seed: u64 },
}

impl ModelSpec {
    pub fn seed(&self) -> u64 {
        match self {
            ModelSpec::Classic(s) => s.seed,
            ModelSpec::Ann { seed, .. } => *seed,
        }
    }

    pub fn fit(&self, x: &Matrix, y: &[usize], n_classes: usize) -> Result<TrainedModel> {
        Ok(match self {
            ModelSpec::Classic(spec) => TrainedModel::Classic(spec.fit(x, y, n_classes)?),
            ModelSpec::Ann { settings, seed } => {
                TrainedModel::Ann(AnnModel::fit(x, y, n_classes, settings, *seed)?)
            }
        })
    }
}

/// `(name, spec)` for every configured model in report order, each seeded
/// from `model/<name>`.
pub fn roster(config: &PipelineConfig) -> Vec<(String, ModelSpec)> {
    let mut out: Vec<(String, ModelSpec)> = config
        .classifiers
        .iter()
        .map(|params| {
            let name = params.kind().name().to_string();
            let spec = ClassifierSpec::new(params.clone(), config.model_seed(&name));
            (name, ModelSpec::Classic(spec))
        })
        .collect();
    if let Some(settings) = &config.ann {
        out.push((
            ANN_NAME.to_string(),
            ModelSpec::Ann {
                settings: settings.clone(),
                seed: config.model_seed(ANN_NAME),
            },
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> (Matrix, Vec<usize>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..60 {
            let c = i % 3;
            let t = i as f64 * 0.01;
            rows.push(vec![c as f64 + t, 2.0 * c as f64 - t]);
            y.push(c);
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn roster_covers_eight_kinds_in_order() {
        let names: Vec<String> = roster(&PipelineConfig::default())
            .into_iter()
            .map(|(n, _)| n)
            .collect();
        assert_eq!(
            names,
            [
                "logistic",
                "lda",
                "knn",
                "naive_bayes",
                "decision_tree",
                "random_forest",
                "svm",
                "ann"
            ]
        );
    }

    #[test]
    fn every_kind_round_trips_through_json() {
        let (x, y) = blobs();
        let mut config = PipelineConfig::default();
        config.ann.as_mut().unwrap().epochs = 3;
        config.ann.as_mut().unwrap().restarts = 2;
        for (name, spec) in roster(&config) {
            let model = spec.fit(&x, &y, 3).unwrap();
            assert_eq!(model.kind_name(), name);
            let text = serde_json::to_string(&model).unwrap();
            let value: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(value["kind"], name.as_str());
            let back: TrainedModel = serde_json::from_str(&text).unwrap();
            assert_eq!(back, model);
        }
    }

    #[test]
    fn restarts_keep_lowest_loss() {
        let (x, y) = blobs();
        let settings = AnnSettings {
            epochs: 5,
            restarts: 3,
            ..AnnSettings::default()
        };
        let m = AnnModel::fit(&x, &y, 3, &settings, 11).unwrap();
        assert_eq!(m.restart_losses.len(), 3);
        let min = m
            .restart_losses
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert_eq!(m.restart_losses[m.restart], min);
        assert_eq!(m.config.seed, derive_seed(11, m.restart as u64));
        let single = AnnModel::fit(
            &x,
            &y,
            3,
            &AnnSettings {
                restarts: 1,
                ..settings
            },
            11,
        )
        .unwrap();
        assert_eq!(single.restart, 0);
    }

    #[test]
    fn probabilities_except_svm() {
        let (x, y) = blobs();
        let mut config = PipelineConfig::default();
        config.ann.as_mut().unwrap().epochs = 2;
        config.ann.as_mut().unwrap().restarts = 1;
        for (name, spec) in roster(&config) {
            let m = spec.fit(&x, &y, 3).unwrap();
            match m.predict_proba(&x).unwrap() {
                None => assert_eq!(name, "svm"),
                Some(p) => {
                    for row in p.row_iter() {
                        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    }
                }
            }
        }
    }
}
