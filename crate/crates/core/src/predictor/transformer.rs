use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::train::{fit, predict_batch, PredictorHyper};
use super::{Regressor, TargetSpec};
use crate::data::WindowedDataset;
use crate::error::{Error, Result, TrainingTrace};
use crate::nn::{
    causal_mask, dropout, scaled_dot_attention, tile_rows, Bound, Graph, LayerNorm, Linear, MultiHeadAttention,
    ParamId, ParamSet, Var,
};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    Causal,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttentionConfig {
    pub num_heads: usize,
    pub model_width: usize,
    pub ff_width: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub mask: MaskMode,
    pub positional_encoding: bool,
    pub dropout: f64,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        Self {
            num_heads: 3,
            model_width: 12,
            ff_width: 32,
            encoder_layers: 2,
            decoder_layers: 2,
            mask: MaskMode::Causal,
            positional_encoding: true,
            dropout: 0.1,
        }
    }
}

impl AttentionConfig {
    pub fn head_width(&self) -> usize {
        self.model_width / self.num_heads.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_heads == 0 || self.model_width == 0 || self.model_width % self.num_heads != 0 {
            return Err(Error::config(format!(
                "heads ({}) must divide the model width ({})",
                self.num_heads, self.model_width
            )));
        }
        if self.encoder_layers == 0 || self.decoder_layers == 0 || self.ff_width == 0 {
            return Err(Error::config("encoder, decoder and feed-forward sizes must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!("dropout {} must lie in [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

/// Fixed sinusoidal positions, `len × width`.
pub fn positional_encoding(len: usize, width: usize) -> Array2<f64> {
    Array2::from_shape_fn((len, width), |(pos, i)| {
        let rate = 10000f64.powf((2 * (i / 2)) as f64 / width as f64);
        let angle = pos as f64 / rate;
        if i % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

/// Single-head scaled dot-product attention over one sequence `y` (`n × d`).
///
/// `mask` is additive (`0` or `-inf`), `n × n`. Returns the `n × d_k`
/// output and the `n × n` attention weights.
pub fn attention_head(
    y: &Array2<f64>,
    w_query: &Array2<f64>,
    w_key: &Array2<f64>,
    w_value: &Array2<f64>,
    mask: Option<&Array2<f64>>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (n, d) = y.dim();
    if n == 0 {
        return Err(Error::contract("attention over an empty sequence"));
    }
    for (name, w) in [("query", w_query), ("key", w_key), ("value", w_value)] {
        if w.nrows() != d {
            return Err(Error::contract(format!("{name} projection has {} rows, input width is {d}", w.nrows())));
        }
    }
    if w_query.ncols() != w_key.ncols() {
        return Err(Error::contract("query and key projections differ in width"));
    }
    if let Some(m) = mask {
        if m.dim() != (n, n) {
            return Err(Error::contract(format!("mask is {:?}, expected {n}×{n}", m.dim())));
        }
        if m.rows().into_iter().any(|r| r.iter().all(|v| *v == f64::NEG_INFINITY)) {
            return Err(Error::contract("a mask row blocks every position"));
        }
    }
    let g = Graph::new();
    let yv = g.constant(y.clone());
    let q = g.matmul(yv, g.constant(w_query.clone()));
    let k = g.matmul(yv, g.constant(w_key.clone()));
    let v = g.matmul(yv, g.constant(w_value.clone()));
    let m = mask.map(|m| g.constant(m.clone()));
    let (out, weights) = scaled_dot_attention(&g, q, k, v, 1, m);
    Ok((g.value(out), g.value(weights)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FeedForward {
    inner: Linear,
    outer: Linear,
}

impl FeedForward {
    fn new(ps: &mut ParamSet, name: &str, width: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            inner: Linear::new(ps, &format!("{name}.inner"), width, hidden, rng),
            outer: Linear::new(ps, &format!("{name}.outer"), hidden, width, rng),
        }
    }

    fn forward(&self, g: &Graph, p: &Bound, x: Var) -> Var {
        self.outer.forward(g, p, g.relu(self.inner.forward(g, p, x)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EncoderLayer {
    attn: MultiHeadAttention,
    norm_attn: LayerNorm,
    ff: FeedForward,
    norm_ff: LayerNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DecoderLayer {
    self_attn: MultiHeadAttention,
    norm_self: LayerNorm,
    cross_attn: MultiHeadAttention,
    norm_cross: LayerNorm,
    ff: FeedForward,
    norm_ff: LayerNorm,
}

fn maybe_drop(g: &Graph, x: Var, rate: f64, rng: &mut Option<&mut ChaCha8Rng>) -> Var {
    match rng {
        Some(r) => dropout(g, x, rate, Some(&mut **r)),
        None => x,
    }
}

/// Encoder-decoder transformer regressor. A single learned query token is
/// the decoder input; its final state feeds the linear head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transformer {
    pub features: usize,
    pub window_len: usize,
    pub config: AttentionConfig,
    pub spec: TargetSpec,
    input: Linear,
    encoders: Vec<EncoderLayer>,
    decoders: Vec<DecoderLayer>,
    query: ParamId,
    pub head: Linear,
    pub params: ParamSet,
}

impl Transformer {
    pub fn new(features: usize, window_len: usize, config: AttentionConfig, spec: TargetSpec, seed: u64) -> Result<Self> {
        config.validate()?;
        if features == 0 || window_len == 0 {
            return Err(Error::config("window length and feature count must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamSet::new();
        let d = config.model_width;
        let h = config.num_heads;
        let input = Linear::new(&mut ps, "input", features, d, &mut rng);
        let encoders = (0..config.encoder_layers)
            .map(|i| {
                let n = format!("encoder{i}");
                EncoderLayer {
                    attn: MultiHeadAttention::new(&mut ps, &format!("{n}.attn"), d, h, &mut rng),
                    norm_attn: LayerNorm::new(&mut ps, &format!("{n}.norm_attn"), d),
                    ff: FeedForward::new(&mut ps, &format!("{n}.ff"), d, config.ff_width, &mut rng),
                    norm_ff: LayerNorm::new(&mut ps, &format!("{n}.norm_ff"), d),
                }
            })
            .collect();
        let decoders = (0..config.decoder_layers)
            .map(|i| {
                let n = format!("decoder{i}");
                DecoderLayer {
                    self_attn: MultiHeadAttention::new(&mut ps, &format!("{n}.self_attn"), d, h, &mut rng),
                    norm_self: LayerNorm::new(&mut ps, &format!("{n}.norm_self"), d),
                    cross_attn: MultiHeadAttention::new(&mut ps, &format!("{n}.cross_attn"), d, h, &mut rng),
                    norm_cross: LayerNorm::new(&mut ps, &format!("{n}.norm_cross"), d),
                    ff: FeedForward::new(&mut ps, &format!("{n}.ff"), d, config.ff_width, &mut rng),
                    norm_ff: LayerNorm::new(&mut ps, &format!("{n}.norm_ff"), d),
                }
            })
            .collect();
        let query = ps.push("query", crate::nn::params::uniform(&mut rng, 1, d, 1.0 / (d as f64).sqrt()));
        let head = Linear::new(&mut ps, "head", d, spec.outputs(features), &mut rng);
        Ok(Self { features, window_len, config, spec, input, encoders, decoders, query, head, params: ps })
    }

    fn encode_graph(&self, g: &Graph, p: &Bound, windows: &[&Array2<f64>], rng: &mut Option<&mut ChaCha8Rng>) -> Var {
        let (b, m, d) = (windows.len(), self.window_len, self.config.model_width);
        let views: Vec<_> = windows.iter().map(|w| w.view()).collect();
        let x = g.constant(ndarray::concatenate(Axis(0), &views).expect("same width"));
        let mut h = self.input.forward(g, p, x);
        if self.config.positional_encoding {
            h = g.add(h, g.constant(tile_rows(&positional_encoding(m, d), b)));
        }
        let mask = match self.config.mask {
            MaskMode::Causal => Some(g.constant(tile_rows(&causal_mask(m), b))),
            MaskMode::None => None,
        };
        let rate = self.config.dropout;
        for layer in &self.encoders {
            let a = layer.attn.forward(g, p, h, h, b, mask);
            h = layer.norm_attn.forward(g, p, g.add(h, maybe_drop(g, a, rate, rng)));
            let f = layer.ff.forward(g, p, h);
            h = layer.norm_ff.forward(g, p, g.add(h, maybe_drop(g, f, rate, rng)));
        }
        h
    }

    /// Encoder states for one window (`M × d`), evaluation mode.
    pub fn encode(&self, window: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_windows(&[window])?;
        let g = Graph::new();
        let p = self.params.bind_frozen(&g);
        let h = self.encode_graph(&g, &p, &[window], &mut None);
        Ok(g.value(h))
    }

    /// One prediction row per window, evaluation mode.
    pub fn predict(&self, windows: &[&Array2<f64>]) -> Result<Array2<f64>> {
        predict_batch(self, windows)
    }

    pub fn forward(&self, window: &Array2<f64>) -> Result<Vec<f64>> {
        Ok(self.predict(&[window])?.row(0).to_vec())
    }
}

impl Regressor for Transformer {
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

    fn graph_forward(&self, g: &Graph, p: &Bound, windows: &[&Array2<f64>], rng: Option<&mut ChaCha8Rng>) -> Var {
        let mut rng = rng;
        let b = windows.len();
        let d = self.config.model_width;
        let memory = self.encode_graph(g, p, windows, &mut rng);
        let rate = self.config.dropout;
        let mut q = g.broadcast_to(p.var(self.query), b, d);
        for layer in &self.decoders {
            let a = layer.self_attn.forward(g, p, q, q, b, None);
            q = layer.norm_self.forward(g, p, g.add(q, maybe_drop(g, a, rate, &mut rng)));
            let c = layer.cross_attn.forward(g, p, q, memory, b, None);
            q = layer.norm_cross.forward(g, p, g.add(q, maybe_drop(g, c, rate, &mut rng)));
            let f = layer.ff.forward(g, p, q);
            q = layer.norm_ff.forward(g, p, g.add(q, maybe_drop(g, f, rate, &mut rng)));
        }
        self.head.forward(g, p, q)
    }
}

/// Trains a transformer on `set` for the targets named by `spec`.
///
/// With a validation set, the parameters of the epoch with the lowest
/// validation MSE are kept.
pub fn train_predictor(
    set: &WindowedDataset,
    spec: TargetSpec,
    config: &AttentionConfig,
    hyper: &PredictorHyper,
    validation: Option<&WindowedDataset>,
) -> Result<(Transformer, TrainingTrace)> {
    hyper.validate()?;
    if set.is_empty() {
        return Err(Error::data("predictor training set has no samples"));
    }
    let mut model = Transformer::new(
        set.num_features(),
        set.window_len,
        config.clone(),
        spec,
        derive_seed(hyper.seed, &["predictor", "init"]),
    )?;
    let trace = fit(&mut model, set, &spec, hyper, validation)?;
    Ok((model, trace))
}
