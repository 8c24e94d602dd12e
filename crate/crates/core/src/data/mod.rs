//! Raw series ingestion, preprocessing, windowing, and splitting.

mod csv_io;
mod preprocess;
mod split;
mod store;
mod synth;
mod window;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv_dataset, CsvSchema};
pub use preprocess::{impute_last_observation, scale_minmax, FitOn, ScalingParams, ScalingWarning};
pub use split::{split_chronological, split_units, Splits, SplitRatios};
pub use store::{load_dataset, save_dataset, DatasetFile, DATASET_SCHEMA_VERSION};
pub use synth::{synth_ar_process, synth_sinusoid, ArSpec};
pub use window::{make_windows, Sample, WindowedDataset};

use crate::error::{Error, Result};

/// One independent series source: `time_length × K` values, `NaN` marking missing cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub id: String,
    pub values: Array2<f64>,
    /// Time index of the first row within the original series.
    #[serde(default)]
    pub offset: usize,
}

impl Unit {
    pub fn new(id: impl Into<String>, values: Array2<f64>) -> Self {
        Self { id: id.into(), values, offset: 0 }
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub seed: Option<u64>,
    pub split: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    pub units: Vec<Unit>,
    pub feature_names: Vec<String>,
    pub interval_description: String,
    #[serde(default)]
    pub provenance: Provenance,
    /// Generating process, when the series are synthetic.
    #[serde(default)]
    pub process: Option<ArSpec>,
    /// Scaling already applied to `units`, if any.
    #[serde(default)]
    pub scaling: Option<ScalingParams>,
}

impl TimeSeriesDataset {
    pub fn new(units: Vec<Unit>, feature_names: Vec<String>, interval_description: impl Into<String>) -> Result<Self> {
        let ds = Self {
            units,
            feature_names,
            interval_description: interval_description.into(),
            provenance: Provenance::default(),
            process: None,
            scaling: None,
        };
        ds.validate_shape()?;
        Ok(ds)
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn num_units(&self) -> usize {
        self.units.len()
    }

    pub fn unit(&self, id: &str) -> Option<&Unit> {
        self.units.iter().find(|u| u.id == id)
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    /// Unique ids, `K` columns everywhere, at least one row per unit.
    pub fn validate_shape(&self) -> Result<()> {
        let k = self.num_features();
        let mut seen = std::collections::HashSet::new();
        for u in &self.units {
            if !seen.insert(u.id.as_str()) {
                return Err(Error::data(format!("duplicate unit id {:?}", u.id)));
            }
            if u.values.ncols() != k {
                return Err(Error::data(format!(
                    "unit {:?} has {} features, expected {k}",
                    u.id,
                    u.values.ncols()
                )));
            }
            if u.is_empty() {
                return Err(Error::data(format!("unit {:?} has no rows", u.id)));
            }
        }
        Ok(())
    }

    pub fn has_missing(&self) -> bool {
        self.units.iter().any(|u| u.values.iter().any(|v| !v.is_finite()))
    }

    /// Copy restricted to `ids`, in the order given.
    pub fn subset(&self, ids: &[String], split: Option<&str>) -> Self {
        let units = ids.iter().filter_map(|id| self.unit(id).cloned()).collect();
        let mut out = Self { units, ..self.clone_empty() };
        if let Some(s) = split {
            out.provenance.split = Some(s.to_string());
        }
        out
    }

    pub(crate) fn clone_empty(&self) -> Self {
        Self {
            units: Vec::new(),
            feature_names: self.feature_names.clone(),
            interval_description: self.interval_description.clone(),
            provenance: self.provenance.clone(),
            process: self.process.clone(),
            scaling: self.scaling.clone(),
        }
    }

    pub fn unit_ids(&self) -> Vec<String> {
        self.units.iter().map(|u| u.id.clone()).collect()
    }
}

/// Units that could not contribute to an operation, with the reason.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkipReport {
    pub skipped: Vec<(String, String)>,
}

impl SkipReport {
    pub fn push(&mut self, unit: &str, reason: impl Into<String>) {
        self.skipped.push((unit.to_string(), reason.into()));
    }

    pub fn len(&self) -> usize {
        self.skipped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skipped.is_empty()
    }
}
