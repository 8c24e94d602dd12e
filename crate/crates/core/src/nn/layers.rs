use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{Graph, Product, Var};
use super::params::{glorot, uniform, Bound, ParamId, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn new(params: &mut ParamSet, name: &str, fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Self {
        let weight = params.push(format!("{name}.weight"), glorot(rng, fan_in, fan_out));
        let bias = params.push(format!("{name}.bias"), Array2::zeros((1, fan_out)));
        Self { weight, bias }
    }

    pub fn forward(&self, g: &Graph, p: &Bound, x: Var) -> Var {
        g.add(g.matmul(x, p.var(self.weight)), p.var(self.bias))
    }
}

/// Single-layer LSTM with fused gate weights in `[input, forget, cell, output]` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    pub w_input: ParamId,
    pub w_hidden: ParamId,
    pub bias: ParamId,
    pub hidden: usize,
}

impl Lstm {
    pub fn new(params: &mut ParamSet, name: &str, input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let w_input = params.push(format!("{name}.w_input"), uniform(rng, input, 4 * hidden, bound));
        let w_hidden = params.push(format!("{name}.w_hidden"), uniform(rng, hidden, 4 * hidden, bound));
        let mut b = Array2::zeros((1, 4 * hidden));
        // forget gate starts open
        b.slice_mut(ndarray::s![.., hidden..2 * hidden]).fill(1.0);
        let bias = params.push(format!("{name}.bias"), b);
        Self { w_input, w_hidden, bias, hidden }
    }

    /// Runs the sequence `steps` (each `batch × input`) from a zero state and
    /// returns every hidden state.
    pub fn forward(&self, g: &Graph, p: &Bound, steps: &[Var]) -> Vec<Var> {
        let h_dim = self.hidden;
        let batch = g.shape(steps[0]).0;
        let mut h = g.constant(Array2::zeros((batch, h_dim)));
        let mut c = g.constant(Array2::zeros((batch, h_dim)));
        let (wi, wh, b) = (p.var(self.w_input), p.var(self.w_hidden), p.var(self.bias));
        let mut outputs = Vec::with_capacity(steps.len());
        for &x in steps {
            let gates = g.add(g.add(g.matmul(x, wi), g.matmul(h, wh)), b);
            let i = g.sigmoid(g.slice_cols(gates, 0, h_dim));
            let f = g.sigmoid(g.slice_cols(gates, h_dim, h_dim));
            let cand = g.tanh(g.slice_cols(gates, 2 * h_dim, h_dim));
            let o = g.sigmoid(g.slice_cols(gates, 3 * h_dim, h_dim));
            c = g.add(g.mul(f, c), g.mul(i, cand));
            h = g.mul(o, g.tanh(c));
            outputs.push(h);
        }
        outputs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub shift: ParamId,
    pub width: usize,
}

impl LayerNorm {
    const EPS: f64 = 1e-5;

    pub fn new(params: &mut ParamSet, name: &str, width: usize) -> Self {
        let gain = params.push(format!("{name}.gain"), Array2::ones((1, width)));
        let shift = params.push(format!("{name}.shift"), Array2::zeros((1, width)));
        Self { gain, shift, width }
    }

    pub fn forward(&self, g: &Graph, p: &Bound, x: Var) -> Var {
        let inv_w = 1.0 / self.width as f64;
        let mean = g.scale(g.sum_cols(x), inv_w);
        let centered = g.sub(x, mean);
        let var = g.scale(g.sum_cols(g.square(centered)), inv_w);
        let inv_std = g.recip(g.sqrt(g.offset(var, Self::EPS)));
        let normed = g.mul(centered, inv_std);
        g.add(g.mul(normed, p.var(self.gain)), p.var(self.shift))
    }
}

/// Additive attention mask: `0` where attention is allowed, `-inf` elsewhere.
pub fn causal_mask(len: usize) -> Array2<f64> {
    Array2::from_shape_fn((len, len), |(i, j)| if j > i { f64::NEG_INFINITY } else { 0.0 })
}

/// Repeats a `queries × keys` mask for each of `batch` stacked sequences.
pub fn tile_rows(mask: &Array2<f64>, batch: usize) -> Array2<f64> {
    let views: Vec<_> = (0..batch).map(|_| mask.view()).collect();
    ndarray::concatenate(ndarray::Axis(0), &views).expect("same width")
}

/// Scaled dot-product attention over `batch` stacked sequences.
///
/// `q` is `batch·m × d_k`; `k` and `v` are `batch·n × d_k`; `mask`, when
/// given, is an additive `batch·m × n` constant. Returns the `batch·m × d_k`
/// output and the attention weights.
pub fn scaled_dot_attention(
    g: &Graph,
    q: Var,
    k: Var,
    v: Var,
    batch: usize,
    mask: Option<Var>,
) -> (Var, Var) {
    let d_k = g.shape(q).1;
    let scores = g.scale(g.bmm(q, k, batch, Product::RightT), 1.0 / (d_k as f64).sqrt());
    let scores = match mask {
        Some(m) => g.add(scores, m),
        None => scores,
    };
    let weights = g.softmax(scores);
    (g.bmm(weights, v, batch, Product::Plain), weights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiHeadAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub heads: usize,
    pub head_width: usize,
}

impl MultiHeadAttention {
    pub fn new(params: &mut ParamSet, name: &str, width: usize, heads: usize, rng: &mut impl Rng) -> Self {
        assert!(heads >= 1 && width % heads == 0, "heads must divide the model width");
        Self {
            query: Linear::new(params, &format!("{name}.query"), width, width, rng),
            key: Linear::new(params, &format!("{name}.key"), width, width, rng),
            value: Linear::new(params, &format!("{name}.value"), width, width, rng),
            output: Linear::new(params, &format!("{name}.output"), width, width, rng),
            heads,
            head_width: width / heads,
        }
    }

    /// `queries` is `batch·m × d`, `memory` is `batch·n × d`.
    pub fn forward(&self, g: &Graph, p: &Bound, queries: Var, memory: Var, batch: usize, mask: Option<Var>) -> Var {
        let q = self.query.forward(g, p, queries);
        let k = self.key.forward(g, p, memory);
        let v = self.value.forward(g, p, memory);
        let w = self.head_width;
        let heads: Vec<Var> = (0..self.heads)
            .map(|h| {
                let (o, _) = scaled_dot_attention(
                    g,
                    g.slice_cols(q, h * w, w),
                    g.slice_cols(k, h * w, w),
                    g.slice_cols(v, h * w, w),
                    batch,
                    mask,
                );
                o
            })
            .collect();
        let joined = if heads.len() == 1 { heads[0] } else { g.concat_cols(&heads) };
        self.output.forward(g, p, joined)
    }
}

/// Inverted dropout; identity when `rate` is zero or no generator is given.
pub fn dropout(g: &Graph, x: Var, rate: f64, rng: Option<&mut dyn rand::RngCore>) -> Var {
    let Some(rng) = rng else { return x };
    if rate <= 0.0 {
        return x;
    }
    let (r, c) = g.shape(x);
    let keep = 1.0 / (1.0 - rate);
    let mask = Array2::from_shape_simple_fn((r, c), || if rng.random::<f64>() < rate { 0.0 } else { keep });
    g.mul(x, g.constant(mask))
}
