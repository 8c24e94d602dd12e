use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::train::{fit, predict_batch, PredictorHyper};
use super::{Regressor, TargetSpec};
use crate::data::WindowedDataset;
use crate::error::{Error, Result, TrainingTrace};
use crate::nn::{Bound, Graph, Linear, Lstm, ParamSet, Var};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmConfig {
    pub hidden: usize,
    pub layers: usize,
    pub dense: usize,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self { hidden: 10, layers: 2, dense: 10 }
    }
}

/// Stacked LSTM over the window; the last hidden state goes through
/// `tanh(dense)` and a linear head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmBaseline {
    pub features: usize,
    pub window_len: usize,
    pub config: LstmConfig,
    pub spec: TargetSpec,
    pub layers: Vec<Lstm>,
    pub dense: Linear,
    pub head: Linear,
    pub params: ParamSet,
}

impl LstmBaseline {
    pub fn new(features: usize, window_len: usize, config: LstmConfig, spec: TargetSpec, seed: u64) -> Result<Self> {
        if config.hidden == 0 || config.layers == 0 || config.dense == 0 || features == 0 || window_len == 0 {
            return Err(Error::config("LSTM baseline sizes must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamSet::new();
        let layers = (0..config.layers)
            .map(|i| {
                let input = if i == 0 { features } else { config.hidden };
                Lstm::new(&mut ps, &format!("lstm{i}"), input, config.hidden, &mut rng)
            })
            .collect();
        let dense = Linear::new(&mut ps, "dense", config.hidden, config.dense, &mut rng);
        let head = Linear::new(&mut ps, "head", config.dense, spec.outputs(features), &mut rng);
        Ok(Self { features, window_len, config, spec, layers, dense, head, params: ps })
    }

    pub fn predict(&self, windows: &[&Array2<f64>]) -> Result<Array2<f64>> {
        predict_batch(self, windows)
    }

    pub fn forward(&self, window: &Array2<f64>) -> Result<Vec<f64>> {
        Ok(self.predict(&[window])?.row(0).to_vec())
    }
}

impl Regressor for LstmBaseline {
    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.window_len, self.features)
    }

    fn outputs(&self) -> usize {
        self.spec.outputs(self.features)
    }

    fn graph_forward(&self, g: &Graph, p: &Bound, windows: &[&Array2<f64>], _rng: Option<&mut ChaCha8Rng>) -> Var {
        let mut steps = crate::cwgan::window_steps(g, windows);
        for layer in &self.layers {
            steps = layer.forward(g, p, &steps);
        }
        let last = *steps.last().expect("nonempty window");
        self.head.forward(g, p, g.tanh(self.dense.forward(g, p, last)))
    }
}

pub fn train_lstm_baseline(
    set: &WindowedDataset,
    spec: TargetSpec,
    config: &LstmConfig,
    hyper: &PredictorHyper,
    validation: Option<&WindowedDataset>,
) -> Result<(LstmBaseline, TrainingTrace)> {
    if set.is_empty() {
        return Err(Error::data("training set has no samples"));
    }
    let mut model = LstmBaseline::new(
        set.num_features(),
        set.window_len,
        config.clone(),
        spec,
        derive_seed(hyper.seed, &["lstm", "init"]),
    )?;
    let trace = fit(&mut model, set, &spec, hyper, validation)?;
    Ok((model, trace))
}
