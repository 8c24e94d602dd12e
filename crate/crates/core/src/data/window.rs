use std::collections::BTreeMap;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::{ScalingParams, SkipReport, TimeSeriesDataset};
use crate::error::{Error, Result};

/// One supervised example: `M × K` window plus the K-vector at each horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub unit_id: String,
    /// Index of the window's first row in the source unit.
    pub start: usize,
    pub window: Array2<f64>,
    pub targets: BTreeMap<usize, Vec<f64>>,
}

impl Sample {
    pub fn target(&self, horizon: usize) -> Result<&[f64]> {
        self.targets
            .get(&horizon)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::contract(format!("sample has no target at horizon {horizon}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    pub samples: Vec<Sample>,
    pub window_len: usize,
    pub horizons: Vec<usize>,
    pub feature_names: Vec<String>,
    pub scaling: Option<ScalingParams>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn windows(&self) -> Vec<&Array2<f64>> {
        self.samples.iter().map(|s| &s.window).collect()
    }

    /// Target values of one feature at `horizon`, in sample order.
    pub fn targets(&self, horizon: usize, feature: usize) -> Result<Vec<f64>> {
        self.samples.iter().map(|s| s.target(horizon).map(|t| t[feature])).collect()
    }

    pub fn target_vectors(&self, horizon: usize) -> Result<Vec<Vec<f64>>> {
        self.samples.iter().map(|s| s.target(horizon).map(<[f64]>::to_vec)).collect()
    }

    /// Copy containing only samples from the given units.
    pub fn filter_units(&self, ids: &[String]) -> Self {
        Self {
            samples: self.samples.iter().filter(|s| ids.contains(&s.unit_id)).cloned().collect(),
            ..self.clone_empty()
        }
    }

    pub(crate) fn clone_empty(&self) -> Self {
        Self {
            samples: Vec::new(),
            window_len: self.window_len,
            horizons: self.horizons.clone(),
            feature_names: self.feature_names.clone(),
            scaling: self.scaling.clone(),
        }
    }
}

/// Slides a length-`window_len` window with stride 1 over every unit and
/// materializes the targets at each horizon.
///
/// Units shorter than `window_len + max(horizons)` are skipped and reported.
pub fn make_windows(
    dataset: &TimeSeriesDataset,
    window_len: usize,
    horizons: &[usize],
) -> Result<(WindowedDataset, SkipReport)> {
    if window_len == 0 {
        return Err(Error::config("window length must be at least 1"));
    }
    if horizons.is_empty() || horizons.contains(&0) {
        return Err(Error::config("horizons must be a nonempty list of positive integers"));
    }
    let mut hs = horizons.to_vec();
    hs.sort_unstable();
    hs.dedup();
    let max_h = *hs.last().expect("nonempty");
    let needed = window_len + max_h;

    let mut samples = Vec::new();
    let mut skips = SkipReport::default();
    for unit in &dataset.units {
        let n = unit.len();
        if n < needed {
            skips.push(&unit.id, format!("length {n} < window {window_len} + horizon {max_h}"));
            continue;
        }
        for start in 0..=(n - needed) {
            let last = start + window_len - 1;
            let targets = hs.iter().map(|&h| (h, unit.values.row(last + h).to_vec())).collect();
            samples.push(Sample {
                unit_id: unit.id.clone(),
                start,
                window: unit.values.slice(s![start..=last, ..]).to_owned(),
                targets,
            });
        }
    }
    Ok((
        WindowedDataset {
            samples,
            window_len,
            horizons: hs,
            feature_names: dataset.feature_names.clone(),
            scaling: dataset.scaling.clone(),
        },
        skips,
    ))
}
