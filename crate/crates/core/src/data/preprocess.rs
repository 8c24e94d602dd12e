use serde::{Deserialize, Serialize};

use super::TimeSeriesDataset;
use crate::error::{Error, Result};

/// Forward-fills missing cells with the last observed value of the same
/// feature in the same unit. A missing first row is refused.
pub fn impute_last_observation(dataset: &TimeSeriesDataset) -> Result<TimeSeriesDataset> {
    let mut out = dataset.clone();
    for unit in &mut out.units {
        for (f, mut col) in unit.values.columns_mut().into_iter().enumerate() {
            let mut last: Option<f64> = None;
            for v in col.iter_mut() {
                if v.is_finite() {
                    last = Some(*v);
                } else {
                    match last {
                        Some(prev) => *v = prev,
                        None => {
                            return Err(Error::data(format!(
                                "unit {:?} feature {:?} is missing at its first time step",
                                unit.id, dataset.feature_names[f]
                            )))
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Per-feature min/max used for `[0, 1]` scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingWarning {
    pub feature: String,
    pub message: String,
}

/// Which units the min/max are computed over.
#[derive(Debug, Clone, PartialEq)]
pub enum FitOn {
    All,
    Units(Vec<String>),
}

impl ScalingParams {
    pub fn fit(dataset: &TimeSeriesDataset, fit_on: &FitOn) -> Result<(Self, Vec<ScalingWarning>)> {
        if dataset.has_missing() {
            return Err(Error::data("scaling requires an imputed dataset"));
        }
        let k = dataset.num_features();
        let mut min = vec![f64::INFINITY; k];
        let mut max = vec![f64::NEG_INFINITY; k];
        let selected = dataset.units.iter().filter(|u| match fit_on {
            FitOn::All => true,
            FitOn::Units(ids) => ids.contains(&u.id),
        });
        let mut any = false;
        for unit in selected {
            any = true;
            for row in unit.values.rows() {
                for (f, &v) in row.iter().enumerate() {
                    min[f] = min[f].min(v);
                    max[f] = max[f].max(v);
                }
            }
        }
        if !any {
            return Err(Error::data("no units selected for fitting the scaler"));
        }
        let warnings = (0..k)
            .filter(|&f| max[f] == min[f])
            .map(|f| ScalingWarning {
                feature: dataset.feature_names[f].clone(),
                message: format!("constant feature (value {}) mapped to 0.0", min[f]),
            })
            .collect();
        Ok((Self { min, max }, warnings))
    }

    pub fn range(&self, feature: usize) -> f64 {
        self.max[feature] - self.min[feature]
    }

    pub fn scale_value(&self, feature: usize, v: f64) -> f64 {
        let r = self.range(feature);
        if r == 0.0 {
            0.0
        } else {
            (v - self.min[feature]) / r
        }
    }

    pub fn invert_value(&self, feature: usize, v: f64) -> f64 {
        self.min[feature] + v * self.range(feature)
    }

    pub fn apply(&self, dataset: &TimeSeriesDataset) -> Result<TimeSeriesDataset> {
        if self.min.len() != dataset.num_features() {
            return Err(Error::contract("scaling parameters do not match the feature count"));
        }
        let mut out = dataset.clone();
        for unit in &mut out.units {
            for mut row in unit.values.rows_mut() {
                for (f, v) in row.iter_mut().enumerate() {
                    *v = self.scale_value(f, *v);
                }
            }
        }
        out.scaling = Some(self.clone());
        Ok(out)
    }

    pub fn invert(&self, dataset: &TimeSeriesDataset) -> TimeSeriesDataset {
        let mut out = dataset.clone();
        for unit in &mut out.units {
            for mut row in unit.values.rows_mut() {
                for (f, v) in row.iter_mut().enumerate() {
                    *v = self.invert_value(f, *v);
                }
            }
        }
        out.scaling = None;
        out
    }
}

/// Fits min/max over `fit_on` and scales the whole dataset with them.
pub fn scale_minmax(
    dataset: &TimeSeriesDataset,
    fit_on: &FitOn,
) -> Result<(TimeSeriesDataset, ScalingParams, Vec<ScalingWarning>)> {
    let (params, warnings) = ScalingParams::fit(dataset, fit_on)?;
    for w in &warnings {
        log::warn!("feature {}: {}", w.feature, w.message);
    }
    let scaled = params.apply(dataset)?;
    Ok((scaled, params, warnings))
}
