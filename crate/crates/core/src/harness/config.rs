use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{
    impute_last_observation, load_csv_dataset, load_dataset, synth_ar_process, ArSpec, CsvSchema, TimeSeriesDataset,
};
use crate::error::{Error, Result};
use crate::strategies::ComparisonConfig;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "GENF_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// A CSV file and its column schema (`preset:<name>` or a TOML file).
    Csv {
        path: PathBuf,
        schema: String,
        /// Keep only these units, in this order.
        #[serde(default)]
        units: Option<Vec<String>>,
        /// Fill gaps with the last observation (a unit-leading gap takes the first).
        #[serde(default = "yes")]
        impute: bool,
    },
    /// A dataset written by `prepare-data`.
    Stored {
        path: PathBuf,
        #[serde(default)]
        units: Option<Vec<String>>,
    },
    /// Simulated vector autoregression. `lags[i]` is the `K × K` matrix of lag `i + 1`.
    Synthetic {
        lags: Vec<Vec<Vec<f64>>>,
        #[serde(default = "one")]
        noise_std: f64,
        #[serde(default = "burn_in")]
        burn_in: usize,
        units: usize,
        length: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

fn burn_in() -> usize {
    200
}

impl DatasetSource {
    pub fn ar_spec(lags: &[Vec<Vec<f64>>], noise_std: f64, burn_in: usize) -> Result<ArSpec> {
        let k = lags.first().map(Vec::len).unwrap_or(0);
        let mats = lags
            .iter()
            .map(|m| {
                if m.len() != k || m.iter().any(|r| r.len() != k) {
                    return Err(Error::config("every lag matrix must be K × K with the same K"));
                }
                Ok(Array2::from_shape_fn((k, k), |(i, j)| m[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        if mats.is_empty() || k == 0 {
            return Err(Error::config("a synthetic source needs at least one nonempty lag matrix"));
        }
        let spec = ArSpec { lags: mats, noise_std, burn_in };
        spec.validate()?;
        Ok(spec)
    }

    /// Files this source reads.
    fn inputs(&self) -> Vec<&Path> {
        match self {
            DatasetSource::Csv { path, schema, .. } => {
                let mut v = vec![path.as_path()];
                if !schema.starts_with("preset:") {
                    v.push(Path::new(schema));
                }
                v
            }
            DatasetSource::Stored { path, .. } => vec![path.as_path()],
            DatasetSource::Synthetic { .. } => Vec::new(),
        }
    }

    pub fn load(&self) -> Result<TimeSeriesDataset> {
        let keep = |ds: TimeSeriesDataset, units: &Option<Vec<String>>| -> Result<TimeSeriesDataset> {
            match units {
                None => Ok(ds),
                Some(ids) => {
                    if let Some(missing) = ids.iter().find(|id| ds.unit(id).is_none()) {
                        return Err(Error::data(format!("unit {missing:?} is not in the dataset")));
                    }
                    Ok(ds.subset(ids, None))
                }
            }
        };
        match self {
            DatasetSource::Csv { path, schema, units, impute } => {
                let ds = keep(load_csv_dataset(path, &CsvSchema::resolve(schema)?)?, units)?;
                if *impute {
                    impute_last_observation(&ds)
                } else {
                    Ok(ds)
                }
            }
            DatasetSource::Stored { path, units } => keep(load_dataset(path)?, units),
            DatasetSource::Synthetic { lags, noise_std, burn_in, units, length, seed } => {
                synth_ar_process(&Self::ar_spec(lags, *noise_std, *burn_in)?, *units, *length, *seed)
            }
        }
    }
}

/// A complete experiment: where the data comes from and what to run on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub experiment: ComparisonConfig,
    /// Defaults to `$GENF_OUTPUT_ROOT/<hash prefix>`, or `runs/<hash prefix>`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// SHA-256 over the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        let canonical = Self { output_dir: None, ..self.clone() };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn resolved_output_dir(&self) -> PathBuf {
        if let Some(dir) = &self.output_dir {
            return dir.clone();
        }
        let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
        root.join(&self.hash()[..12])
    }

    /// Drops repeated seeds (keeping first occurrences) and checks
    /// everything that can be checked without loading data. Returns the
    /// warnings raised while normalizing.
    pub fn normalize(&mut self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let mut seeds = Vec::with_capacity(self.experiment.seeds.len());
        for &s in &self.experiment.seeds {
            if seeds.contains(&s) {
                warnings.push(format!("duplicate seed {s} removed"));
            } else {
                seeds.push(s);
            }
        }
        self.experiment.seeds = seeds;
        self.experiment.validate_shape()?;
        for path in self.dataset.inputs() {
            if !path.exists() {
                return Err(Error::config(format!("input file {} does not exist", path.display())));
            }
        }
        if let DatasetSource::Synthetic { lags, noise_std, burn_in, units, length, .. } = &self.dataset {
            DatasetSource::ar_spec(lags, *noise_std, *burn_in)?;
            if *units == 0 || *length == 0 {
                return Err(Error::config("a synthetic source needs positive units and length"));
            }
        }
        Ok(warnings)
    }
}

/// Parses, normalizes and checks a TOML experiment file. Warnings go to the log.
pub fn validate_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config = ExperimentConfig::from_toml_str(&text)?;
    for w in config.normalize()? {
        log::warn!("{}: {w}", path.display());
    }
    Ok(config)
}
