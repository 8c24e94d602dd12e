//! Point-forecast error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mse,
    Mae,
    Smape,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Mse, Metric::Mae, Metric::Smape];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Mae => "mae",
            Metric::Smape => "smape",
        }
    }

    pub fn compute(self, pred: &[f64], truth: &[f64]) -> Result<f64> {
        match self {
            Metric::Mse => mse(pred, truth),
            Metric::Mae => mae(pred, truth),
            Metric::Smape => smape(pred, truth),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleSpace {
    Scaled,
    Original,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub metric: Metric,
    pub value: f64,
    pub n: usize,
    pub scale_space: ScaleSpace,
}

fn check_lengths(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::contract(format!(
            "prediction length {} != truth length {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::contract("metrics need at least one value"));
    }
    Ok(())
}

pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let total: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(total / pred.len() as f64)
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let total: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum();
    Ok(total / pred.len() as f64)
}

/// Two-sided sMAPE in percent, bounded in `[0, 200]`. A `0/0` term counts as 0.
pub fn smape(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let total: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| {
            let denom = p.abs() + t.abs();
            if denom == 0.0 {
                0.0
            } else {
                2.0 * (p - t).abs() / denom
            }
        })
        .sum();
    Ok(100.0 * total / pred.len() as f64)
}

/// All three metrics as records.
pub fn evaluate(pred: &[f64], truth: &[f64], scale_space: ScaleSpace) -> Result<Vec<MetricRecord>> {
    Metric::ALL
        .iter()
        .map(|&metric| {
            Ok(MetricRecord { metric, value: metric.compute(pred, truth)?, n: pred.len(), scale_space })
        })
        .collect()
}
