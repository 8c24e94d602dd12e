use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Regressor, TargetSpec};
use crate::data::WindowedDataset;
use crate::error::{Error, Result, TrainingTrace};
use crate::nn::{Adam, Graph};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorHyper {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub seed: u64,
}

impl Default for PredictorHyper {
    fn default() -> Self {
        Self { learning_rate: 1e-3, batch_size: 64, epochs: 1000, adam_beta1: 0.9, adam_beta2: 0.999, seed: 0 }
    }
}

impl PredictorHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::config("learning_rate, batch_size and epochs must be positive"));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::config("Adam moment rates must lie in [0, 1)"));
        }
        Ok(())
    }
}

const CHUNK: usize = 256;

/// Evaluation-mode predictions, `windows.len() × outputs`.
pub fn predict_batch<R: Regressor + ?Sized>(model: &R, windows: &[&Array2<f64>]) -> Result<Array2<f64>> {
    model.check_windows(windows)?;
    if windows.is_empty() {
        return Ok(Array2::zeros((0, model.outputs())));
    }
    let parts: Vec<Array2<f64>> = windows
        .par_chunks(CHUNK)
        .map(|chunk| {
            let g = Graph::new();
            let p = model.params().bind_frozen(&g);
            g.value(model.graph_forward(&g, &p, chunk, None))
        })
        .collect();
    let views: Vec<_> = parts.iter().map(|a| a.view()).collect();
    Ok(ndarray::concatenate(Axis(0), &views).expect("same width"))
}

/// Evaluation-mode MSE over all outputs and, optionally, its parameter gradients.
pub fn loss_and_grads<R: Regressor + ?Sized>(
    model: &R,
    windows: &[&Array2<f64>],
    targets: &Array2<f64>,
    with_grads: bool,
) -> Result<(f64, Vec<Array2<f64>>)> {
    model.check_windows(windows)?;
    if windows.is_empty() || targets.dim() != (windows.len(), model.outputs()) {
        return Err(Error::contract(format!(
            "{} windows against targets of shape {:?}",
            windows.len(),
            targets.dim()
        )));
    }
    let g = Graph::new();
    let p = model.params().bind(&g);
    let pred = model.graph_forward(&g, &p, windows, None);
    let loss = g.mean(g.square(g.sub(pred, g.constant(targets.clone()))));
    let value = g.scalar(loss);
    if !with_grads {
        return Ok((value, Vec::new()));
    }
    let grads = g.backward(loss, p.vars()).into_iter().map(|v| g.value(v)).collect();
    Ok((value, grads))
}

fn select_rows(y: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    y.select(Axis(0), idx)
}

/// Minibatch MSE training with Adam and dropout. Epoch `loss` in the trace is
/// the mean training MSE; `aux` is the validation MSE (0 without a validation set).
pub fn fit<R: Regressor>(
    model: &mut R,
    set: &WindowedDataset,
    spec: &TargetSpec,
    hyper: &PredictorHyper,
    validation: Option<&WindowedDataset>,
) -> Result<TrainingTrace> {
    hyper.validate()?;
    if set.is_empty() {
        return Err(Error::data("training set has no samples"));
    }
    let windows = set.windows();
    model.check_windows(&windows)?;
    let y = spec.extract(set)?;
    let val = match validation {
        Some(v) if !v.is_empty() => Some((v.windows(), spec.extract(v)?)),
        _ => None,
    };
    if let Some((vw, _)) = &val {
        model.check_windows(vw)?;
    }

    let mut opt = Adam::new(model.params(), hyper.learning_rate);
    opt.beta1 = hyper.adam_beta1;
    opt.beta2 = hyper.adam_beta2;
    let mut order_rng = ChaCha8Rng::seed_from_u64(derive_seed(hyper.seed, &["fit", "order"]));
    let mut drop_rng = ChaCha8Rng::seed_from_u64(derive_seed(hyper.seed, &["fit", "dropout"]));
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut trace = TrainingTrace::default();
    let mut best: Option<(f64, crate::nn::ParamSet)> = None;

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        for idx in order.chunks(hyper.batch_size) {
            let batch: Vec<&Array2<f64>> = idx.iter().map(|&i| windows[i]).collect();
            let target = select_rows(&y, idx);
            let g = Graph::new();
            let p = model.params().bind(&g);
            let pred = model.graph_forward(&g, &p, &batch, Some(&mut drop_rng));
            let loss = g.mean(g.square(g.sub(pred, g.constant(target))));
            let value = g.scalar(loss);
            if !value.is_finite() {
                trace.push(epoch, value, 0.0);
                return Err(Error::Training { message: format!("non-finite loss in epoch {epoch}"), trace });
            }
            let grads: Vec<Array2<f64>> = g.backward(loss, p.vars()).into_iter().map(|v| g.value(v)).collect();
            opt.step(model.params_mut(), &grads);
            total += value * idx.len() as f64;
        }
        let train_mse = total / set.len() as f64;
        let val_mse = match &val {
            Some((vw, vy)) => {
                let pred = predict_batch(model, vw)?;
                let mse = (&pred - vy).mapv(|v| v * v).mean().unwrap_or(0.0);
                if mse.is_finite() && best.as_ref().is_none_or(|(b, _)| mse < *b) {
                    best = Some((mse, model.params().clone()));
                }
                mse
            }
            None => 0.0,
        };
        trace.push(epoch, train_mse, val_mse);
    }
    if let Some((_, params)) = best {
        *model.params_mut() = params;
    }
    if !model.params().all_finite() {
        return Err(Error::Training { message: "parameters became non-finite".into(), trace });
    }
    Ok(trace)
}
