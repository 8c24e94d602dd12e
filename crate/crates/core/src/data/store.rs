use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TimeSeriesDataset;
use crate::error::{Error, Result};

pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// On-disk envelope of a dataset: JSON with an explicit schema version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub schema_version: u32,
    pub dataset: TimeSeriesDataset,
}

pub fn save_dataset(path: impl AsRef<Path>, dataset: &TimeSeriesDataset) -> Result<()> {
    let path = path.as_ref();
    let file = DatasetFile { schema_version: DATASET_SCHEMA_VERSION, dataset: dataset.clone() };
    let text = serde_json::to_string(&file)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: DatasetFile = serde_json::from_str(&text)?;
    if file.schema_version != DATASET_SCHEMA_VERSION {
        return Err(Error::data(format!(
            "{} has dataset schema version {}, expected {DATASET_SCHEMA_VERSION}",
            path.display(),
            file.schema_version
        )));
    }
    file.dataset.validate_shape()?;
    Ok(file.dataset)
}
