use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cwgan::{CwganDims, CwganHyper, Generator};
use crate::data::ScalingParams;
use crate::error::{Error, Result};
use crate::predictor::{AttentionConfig, PredictorHyper, Transformer};

pub const BUNDLE_SCHEMA_VERSION: u32 = 1;

/// A trained model together with everything needed to reuse it: the
/// scaling it was trained under, its settings and its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle<S, M> {
    pub schema_version: u32,
    pub kind: String,
    pub scaling: ScalingParams,
    pub window_len: usize,
    pub settings: S,
    pub seed: u64,
    pub model: M,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSettings {
    pub dims: CwganDims,
    pub hyper: CwganHyper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSettings {
    pub attention: AttentionConfig,
    pub hyper: PredictorHyper,
}

pub type GeneratorBundle = Bundle<GeneratorSettings, Generator>;
pub type PredictorBundle = Bundle<PredictorSettings, Transformer>;

pub const GENERATOR_KIND: &str = "cwgan-generator";
pub const PREDICTOR_KIND: &str = "transformer-predictor";

impl<S, M> Bundle<S, M>
where
    S: Serialize + DeserializeOwned,
    M: Serialize + DeserializeOwned,
{
    pub fn new(kind: &str, scaling: ScalingParams, window_len: usize, settings: S, seed: u64, model: M) -> Self {
        Self { schema_version: BUNDLE_SCHEMA_VERSION, kind: kind.to_string(), scaling, window_len, settings, seed, model }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads a bundle and checks its schema version and kind.
    pub fn load(path: impl AsRef<Path>, kind: &str) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let head: serde_json::Value = serde_json::from_str(&text)?;
        let version = head.get("schema_version").and_then(|v| v.as_u64());
        if version != Some(BUNDLE_SCHEMA_VERSION as u64) {
            return Err(Error::data(format!(
                "{} has bundle schema version {version:?}, expected {BUNDLE_SCHEMA_VERSION}",
                path.display()
            )));
        }
        let found = head.get("kind").and_then(|v| v.as_str()).unwrap_or("");
        if found != kind {
            return Err(Error::data(format!("{} holds a {found:?} bundle, expected {kind:?}", path.display())));
        }
        Ok(serde_json::from_value(head)?)
    }
}
