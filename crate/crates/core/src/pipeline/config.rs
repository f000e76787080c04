//! The experiment configuration file and the seed hash chain.
//!
//! Every stochastic consumer draws its seed from `master_seed` through
//! [`derive_seed_for`] with a fixed label:
//!
//! | consumer | label |
//! |---|---|
//! | cohort generator (unless `data.seed` is set) | `generator` |
//! | train/test split | `split` |
//! | cross-validation folds | `folds` |
//! | classifier `name` (forest trees derive from it by index) | `model/<name>` |
//! | the network (restart `r` uses `derive_seed(seed, r)`) | `model/ann` |

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::generator::{GeneratorSettings, DEFAULT_NOISE_RATE, DEFAULT_ROWS};
use crate::classic::{ClassicParams, ClassifierKind};
use crate::error::{Error, Result};
use crate::eval::DEFAULT_FOLDS;
use crate::json::{byte_offset, to_canonical_string};
use crate::neural::{
    default_hidden_width, NetworkConfig, DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_HIDDEN_LAYERS,
    DEFAULT_LEARNING_RATE,
};
use crate::preprocess::PreprocessOptions;
use crate::rng::derive_seed_for;

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_MASTER_SEED: u64 = 2021;
pub const ANN_NAME: &str = "ann";
pub const DEFAULT_RESTARTS: usize = 5;

/// Where the cohort comes from. In JSON the variant is named by `source`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// A CSV file plus its JSON schema. Relative paths are resolved against
    /// the directory of the config file.
    Csv { csv: PathBuf, schema: PathBuf },
    /// The synthetic cohort. `seed: null` derives it from `master_seed`.
    Generate {
        #[serde(default = "default_rows")]
        n_rows: usize,
        #[serde(default = "default_noise")]
        noise_rate: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn default_rows() -> usize {
    DEFAULT_ROWS
}

fn default_noise() -> f64 {
    DEFAULT_NOISE_RATE
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Generate {
            n_rows: DEFAULT_ROWS,
            noise_rate: DEFAULT_NOISE_RATE,
            seed: None,
        }
    }
}

/// Network settings; input and output widths come from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnSettings {
    /// Explicit hidden widths; `null` means six layers of the default width.
    pub hidden_layers: Option<Vec<usize>>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Independent initializations; the one with the lowest final
    /// training loss is kept.
    pub restarts: usize,
}

impl Default for AnnSettings {
    fn default() -> Self {
        Self {
            hidden_layers: None,
            learning_rate: DEFAULT_LEARNING_RATE,
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

impl AnnSettings {
    pub fn network_config(&self, input_dim: usize, output_dim: usize, seed: u64) -> NetworkConfig {
        NetworkConfig {
            input_dim,
            hidden_layers: self.hidden_layers.clone().unwrap_or_else(|| {
                vec![default_hidden_width(input_dim, output_dim); DEFAULT_HIDDEN_LAYERS]
            }),
            output_dim,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: DataSource,
    pub preprocess: PreprocessOptions,
    pub test_fraction: f64,
    pub cv_k: usize,
    /// Classical models, at most one per kind, reported in this order.
    pub classifiers: Vec<ClassicParams>,
    /// The network, reported after the classifiers; `null` leaves it out.
    pub ann: Option<AnnSettings>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        use ClassifierKind::*;
        Self {
            data: DataSource::default(),
            preprocess: PreprocessOptions::default(),
            test_fraction: DEFAULT_TEST_FRACTION,
            cv_k: DEFAULT_FOLDS,
            classifiers: [
                Logistic,
                Lda,
                Knn,
                NaiveBayes,
                DecisionTree,
                RandomForest,
                Svm,
            ]
            .into_iter()
            .map(ClassicParams::default_for)
            .collect(),
            ann: Some(AnnSettings::default()),
            master_seed: DEFAULT_MASTER_SEED,
            output_dir: PathBuf::from("results"),
        }
    }
}

impl PipelineConfig {
    /// Parses config JSON. Syntax errors, unknown keys and wrong types are
    /// all config errors carrying the byte offset.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("{e} (byte {})", byte_offset(text, &e))))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file and resolves relative CSV paths against its
    /// directory. An unreadable file is a config error.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let DataSource::Csv { csv, schema } = &mut config.data {
            let base = path.parent().unwrap_or(Path::new(""));
            for p in [csv, schema] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(config)
    }

    /// Canonical JSON with every default spelled out.
    pub fn to_json(&self) -> String {
        to_canonical_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.cv_k == 1 {
            return Err(Error::Config(
                "cv_k must be 0 (disabled) or at least 2".into(),
            ));
        }
        let o = &self.preprocess;
        if !(o.p_threshold > 0.0 && o.p_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "p_threshold must lie in (0, 1], got {}",
                o.p_threshold
            )));
        }
        if !(o.corr_threshold > 0.0 && o.corr_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "corr_threshold must lie in (0, 1], got {}",
                o.corr_threshold
            )));
        }
        let mut seen = HashSet::new();
        for c in &self.classifiers {
            if !seen.insert(c.kind()) {
                return Err(Error::Config(format!(
                    "classifier '{}' listed twice",
                    c.kind().name()
                )));
            }
        }
        if self.classifiers.is_empty() && self.ann.is_none() {
            return Err(Error::Config("the model roster is empty".into()));
        }
        if let Some(ann) = &self.ann {
            // Probe the network config with placeholder widths.
            ann.network_config(1, 2, 0).validate()?;
            if ann.restarts == 0 {
                return Err(Error::Config("ann.restarts must be at least 1".into()));
            }
        }
        if let Some(settings) = self.generator_settings() {
            settings.validate()?;
        }
        Ok(())
    }

    pub fn seed_for(&self, label: &str) -> u64 {
        derive_seed_for(self.master_seed, label)
    }

    pub fn model_seed(&self, name: &str) -> u64 {
        self.seed_for(&format!("model/{name}"))
    }

    /// Generator settings when the data source is synthetic.
    pub fn generator_settings(&self) -> Option<GeneratorSettings> {
        match &self.data {
            DataSource::Generate {
                n_rows,
                noise_rate,
                seed,
            } => Some(GeneratorSettings {
                n_rows: *n_rows,
                noise_rate: *noise_rate,
                seed: seed.unwrap_or_else(|| self.seed_for("generator")),
            }),
            DataSource::Csv { .. } => None,
        }
    }

    /// Model names in report order.
    pub fn model_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .classifiers
            .iter()
            .map(|c| c.kind().name().to_string())
            .collect();
        if self.ann.is_some() {
            names.push(ANN_NAME.to_string());
        }
        names
    }

    /// SHA-256 (hex) of the canonical JSON with `output_dir` blanked, so the
    /// same experiment written to two places has one digest.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let bytes = Sha256::digest(c.to_json().as_bytes());
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }
}
