//! Shallow encoder-decoder transformer regressor and the stacked-LSTM baseline.

mod lstm;
mod train;
mod transformer;

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Bound, Graph, ParamSet, Var};

pub use lstm::{train_lstm_baseline, LstmBaseline, LstmConfig};
pub use train::{fit, loss_and_grads, predict_batch, PredictorHyper};
pub use transformer::{
    attention_head, positional_encoding, train_predictor, AttentionConfig, MaskMode, Transformer,
};

/// What a regressor is trained to output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// One feature, by index.
    Feature(usize),
    /// The whole K-vector (one-step models for iterative forecasting).
    AllFeatures,
}

/// Which sample targets a model learns and how its inputs were formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    /// Key into each sample's target map, counted from the real window's end.
    pub horizon: usize,
    pub target: Target,
    /// Synthetic rows at the end of each training window (0 for direct models).
    pub synthetic_len: usize,
}

impl TargetSpec {
    pub fn direct(horizon: usize, feature: usize) -> Self {
        Self { horizon, target: Target::Feature(feature), synthetic_len: 0 }
    }

    pub fn one_step() -> Self {
        Self { horizon: 1, target: Target::AllFeatures, synthetic_len: 0 }
    }

    pub fn outputs(&self, features: usize) -> usize {
        match self.target {
            Target::Feature(_) => 1,
            Target::AllFeatures => features,
        }
    }

    /// Target rows for every sample.
    pub fn extract(&self, set: &crate::data::WindowedDataset) -> Result<Array2<f64>> {
        let k = set.num_features();
        let out = self.outputs(k);
        if let Target::Feature(f) = self.target {
            if f >= k {
                return Err(Error::config(format!("target feature {f} out of range for {k} features")));
            }
        }
        let mut y = Array2::zeros((set.len(), out));
        for (i, s) in set.samples.iter().enumerate() {
            let t = s.target(self.horizon)?;
            match self.target {
                Target::Feature(f) => y[[i, 0]] = t[f],
                Target::AllFeatures => y.row_mut(i).assign(&ndarray::ArrayView1::from(t)),
            }
        }
        Ok(y)
    }
}

/// A differentiable window-to-vector model trained by [`fit`].
pub trait Regressor: Sync {
    fn params(&self) -> &ParamSet;
    fn params_mut(&mut self) -> &mut ParamSet;
    /// `(M, K)` of accepted windows.
    fn input_shape(&self) -> (usize, usize);
    fn outputs(&self) -> usize;
    /// `batch × outputs`. Dropout is active only when `rng` is given.
    fn graph_forward(&self, g: &Graph, p: &Bound, windows: &[&Array2<f64>], rng: Option<&mut ChaCha8Rng>) -> Var;

    fn check_windows(&self, windows: &[&Array2<f64>]) -> Result<()> {
        let (m, k) = self.input_shape();
        for w in windows {
            if w.dim() != (m, k) {
                return Err(Error::contract(format!("expected a {m}×{k} window, got {:?}", w.dim())));
            }
        }
        Ok(())
    }
}
