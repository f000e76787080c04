//! Versioned model files.
//!
//! A model file is canonical JSON holding the model, the fitted
//! preprocessing, the class labels and training metadata. Loading checks
//! syntax first, then `schema_version`, then the structure.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::models::TrainedModel;
use crate::error::{Error, Result};
use crate::json::{byte_offset, to_canonical_string};
use crate::preprocess::PreprocessState;
use crate::rng::RNG_VERSION;
use crate::tabular::Table;

pub const MODEL_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub config_digest: String,
    pub rng_version: u32,
}

impl TrainingMetadata {
    pub fn new(seed: u64, config_digest: impl Into<String>) -> Self {
        Self {
            seed,
            config_digest: config_digest.into(),
            rng_version: RNG_VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u64,
    pub name: String,
    pub model: TrainedModel,
    pub preprocess: PreprocessState,
    pub class_labels: Vec<String>,
    pub metadata: TrainingMetadata,
}

impl ModelFile {
    pub fn new(
        name: impl Into<String>,
        model: TrainedModel,
        preprocess: PreprocessState,
        metadata: TrainingMetadata,
    ) -> Self {
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            name: name.into(),
            model,
            class_labels: preprocess.class_labels.clone(),
            preprocess,
            metadata,
        }
    }

    pub fn to_json(&self) -> String {
        to_canonical_string(self).expect("model file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let format = |e: serde_json::Error| Error::Format {
            offset: byte_offset(text, &e),
            message: e.to_string(),
        };
        let value: serde_json::Value = parse_deep(text).map_err(format)?;
        let version = value
            .get("schema_version")
            .ok_or_else(|| Error::Format {
                offset: 0,
                message: "missing schema_version".into(),
            })?
            .as_u64()
            .ok_or_else(|| Error::Format {
                offset: 0,
                message: "schema_version is not a non-negative integer".into(),
            })?;
        if version != MODEL_SCHEMA_VERSION {
            return Err(Error::Version {
                found: version,
                supported: MODEL_SCHEMA_VERSION,
            });
        }
        parse_deep(text).map_err(format)
    }

    /// Class indices for the rows of a raw table, replaying the stored
    /// preprocessing.
    pub fn predict_table(&self, table: &Table) -> Result<Vec<usize>> {
        self.model.predict(&self.preprocess.transform(table)?)
    }
}

/// Deep trees nest past serde_json's default recursion limit.
fn parse_deep<T: for<'de> Deserialize<'de>>(text: &str) -> serde_json::Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let value = T::deserialize(&mut de)?;
    de.end()?;
    Ok(value)
}

/// Writes to a sibling temporary file and renames it into place.
pub fn save_model(file: &ModelFile, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), file.to_json().as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelFile::from_json(&text)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
