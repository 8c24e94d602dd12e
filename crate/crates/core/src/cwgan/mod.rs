//! CWGAN-TS: a conditional Wasserstein GAN with gradient penalty and a
//! supervised term, producing one synthetic step at a time.
//!
//! With a single feature the two-sided penalty can trap the critic: its
//! candidate gradient is a scalar, so reversing a wrongly signed slope means
//! passing through zero slope, which costs `λ`. With `K ≥ 2` the gradient can
//! rotate at unit norm instead.

mod recursive;
mod train;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Bound, Graph, Linear, Lstm, ParamSet, Var};

pub use recursive::{effective_window, generate_recursive, generate_recursive_batch, StepGenerator};
pub use train::{cwgan_losses, train_cwgan, train_supervised_generator, CwganHyper, LossPair};

/// Layer widths. Defaults follow the published configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CwganDims {
    pub generator_hidden: usize,
    pub generator_dense: usize,
    pub critic_hidden: usize,
    pub critic_dense: Vec<usize>,
}

impl Default for CwganDims {
    fn default() -> Self {
        Self { generator_hidden: 5, generator_dense: 12, critic_hidden: 5, critic_dense: vec![12, 4] }
    }
}

impl CwganDims {
    pub fn validate(&self) -> Result<()> {
        if self.generator_hidden == 0
            || self.generator_dense == 0
            || self.critic_hidden == 0
            || self.critic_dense.contains(&0)
        {
            return Err(Error::config("CWGAN layer widths must be positive"));
        }
        Ok(())
    }
}

/// Splits `batch` windows (`M × K` each) into `M` step inputs of `batch × K`.
pub(crate) fn window_steps(g: &Graph, windows: &[&Array2<f64>]) -> Vec<Var> {
    let rows = windows[0].nrows();
    let k = windows[0].ncols();
    (0..rows)
        .map(|t| g.constant(Array2::from_shape_fn((windows.len(), k), |(b, f)| windows[b][[t, f]])))
        .collect()
}

pub(crate) fn check_windows(windows: &[&Array2<f64>], rows: usize, k: usize) -> Result<()> {
    if windows.is_empty() {
        return Err(Error::contract("empty batch"));
    }
    for w in windows {
        if w.dim() != (rows, k) {
            return Err(Error::contract(format!("expected a {rows}×{k} window, got {:?}", w.dim())));
        }
    }
    Ok(())
}

/// Recurrent encoder over the condition plus a noise row, then two dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub features: usize,
    pub window_len: usize,
    pub dims: CwganDims,
    lstm: Lstm,
    dense: Linear,
    out: Linear,
    pub params: ParamSet,
}

impl Generator {
    pub fn new(features: usize, window_len: usize, dims: &CwganDims, rng: &mut impl Rng) -> Self {
        let mut params = ParamSet::new();
        let lstm = Lstm::new(&mut params, "gen.lstm", features, dims.generator_hidden, rng);
        let dense = Linear::new(&mut params, "gen.dense", dims.generator_hidden, dims.generator_dense, rng);
        let out = Linear::new(&mut params, "gen.out", dims.generator_dense, features, rng);
        Self { features, window_len, dims: dims.clone(), lstm, dense, out, params }
    }

    /// `batch × K` generated steps. `steps` holds the `M` condition rows.
    pub(crate) fn graph_forward(&self, g: &Graph, p: &Bound, steps: &[Var], noise: Var) -> Var {
        let mut seq = steps.to_vec();
        seq.push(noise);
        let hs = self.lstm.forward(g, p, &seq);
        let h = g.tanh(self.dense.forward(g, p, *hs.last().expect("nonempty sequence")));
        self.out.forward(g, p, h)
    }

    /// Next step for each condition window; `noise` is `batch × K`.
    pub fn forward_batch(&self, conditions: &[&Array2<f64>], noise: &Array2<f64>) -> Result<Array2<f64>> {
        check_windows(conditions, self.window_len, self.features)?;
        if noise.dim() != (conditions.len(), self.features) {
            return Err(Error::contract(format!(
                "noise must be {}×{}, got {:?}",
                conditions.len(),
                self.features,
                noise.dim()
            )));
        }
        let g = Graph::new();
        let p = self.params.bind_frozen(&g);
        let steps = window_steps(&g, conditions);
        let z = g.constant(noise.clone());
        Ok(g.value(self.graph_forward(&g, &p, &steps, z)))
    }

    /// Generated observation following `condition`.
    pub fn forward(&self, condition: &Array2<f64>, noise: &[f64]) -> Result<Vec<f64>> {
        let z = Array2::from_shape_vec((1, noise.len()), noise.to_vec()).expect("row vector");
        Ok(self.forward_batch(&[condition], &z)?.row(0).to_vec())
    }
}

/// Wasserstein critic: recurrent encoder over condition and candidate, then
/// dense layers down to one unbounded score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Critic {
    pub features: usize,
    pub window_len: usize,
    pub dims: CwganDims,
    lstm: Lstm,
    dense: Vec<Linear>,
    out: Linear,
    pub params: ParamSet,
}

impl Critic {
    pub fn new(features: usize, window_len: usize, dims: &CwganDims, rng: &mut impl Rng) -> Self {
        let mut params = ParamSet::new();
        let lstm = Lstm::new(&mut params, "critic.lstm", features, dims.critic_hidden, rng);
        let mut dense = Vec::new();
        let mut width = dims.critic_hidden;
        for (i, &w) in dims.critic_dense.iter().enumerate() {
            dense.push(Linear::new(&mut params, &format!("critic.dense{i}"), width, w, rng));
            width = w;
        }
        let out = Linear::new(&mut params, "critic.out", width, 1, rng);
        Self { features, window_len, dims: dims.clone(), lstm, dense, out, params }
    }

    /// `batch × 1` scores of `candidate` (`batch × K`) following `steps`.
    pub(crate) fn graph_forward(&self, g: &Graph, p: &Bound, steps: &[Var], candidate: Var) -> Var {
        let mut seq = steps.to_vec();
        seq.push(candidate);
        let hs = self.lstm.forward(g, p, &seq);
        let mut h = *hs.last().expect("nonempty sequence");
        for layer in &self.dense {
            h = g.tanh(layer.forward(g, p, h));
        }
        self.out.forward(g, p, h)
    }

    pub fn forward_batch(&self, conditions: &[&Array2<f64>], candidates: &Array2<f64>) -> Result<Vec<f64>> {
        check_windows(conditions, self.window_len, self.features)?;
        if candidates.dim() != (conditions.len(), self.features) {
            return Err(Error::contract("one K-wide candidate row per condition is required"));
        }
        let g = Graph::new();
        let p = self.params.bind_frozen(&g);
        let steps = window_steps(&g, conditions);
        let c = g.constant(candidates.clone());
        Ok(g.value(self.graph_forward(&g, &p, &steps, c)).column(0).to_vec())
    }

    pub fn forward(&self, condition: &Array2<f64>, candidate: &[f64]) -> Result<f64> {
        let c = Array2::from_shape_vec((1, candidate.len()), candidate.to_vec()).expect("row vector");
        Ok(self.forward_batch(&[condition], &c)?[0])
    }
}

/// Mean over the batch of `(‖∇_x̂ D(x̂ | Y)‖₂ − 1)²` with `x̂ = ε·fake + (1−ε)·real`.
/// The gradient is taken with respect to the interpolate only.
pub(crate) fn graph_penalty(
    g: &Graph,
    critic: &Critic,
    p: &Bound,
    steps: &[Var],
    real: Var,
    fake: Var,
    eps: Var,
) -> Var {
    let diff = g.sub(fake, real);
    let interp = g.add(real, g.mul(eps, diff));
    let scores = critic.graph_forward(g, p, steps, interp);
    let grad = g.backward(g.sum(scores), &[interp])[0];
    let norm = g.sqrt(g.sum_cols(g.square(grad)));
    g.mean(g.square(g.offset(norm, -1.0)))
}

fn penalty_inputs(
    critic: &Critic,
    conditions: &[&Array2<f64>],
    real: &Array2<f64>,
    fake: &Array2<f64>,
    eps: &[f64],
) -> Result<()> {
    check_windows(conditions, critic.window_len, critic.features)?;
    let shape = (conditions.len(), critic.features);
    if real.dim() != shape || fake.dim() != shape || eps.len() != conditions.len() {
        return Err(Error::contract("real, fake and epsilon must match the batch"));
    }
    Ok(())
}

/// Gradient penalty for one condition, with the interpolation weight `eps`.
pub fn gradient_penalty(
    critic: &Critic,
    condition: &Array2<f64>,
    real_step: &[f64],
    fake_step: &[f64],
    eps: f64,
) -> Result<f64> {
    let row = |v: &[f64]| Array2::from_shape_vec((1, v.len()), v.to_vec()).expect("row vector");
    gradient_penalty_batch(critic, &[condition], &row(real_step), &row(fake_step), &[eps])
}

/// Batch-mean gradient penalty.
pub fn gradient_penalty_batch(
    critic: &Critic,
    conditions: &[&Array2<f64>],
    real: &Array2<f64>,
    fake: &Array2<f64>,
    eps: &[f64],
) -> Result<f64> {
    Ok(gradient_penalty_grads(critic, conditions, real, fake, eps, false)?.0)
}

/// Batch-mean gradient penalty and, when `with_grads` is set, its gradient
/// with respect to every critic parameter tensor.
pub fn gradient_penalty_grads(
    critic: &Critic,
    conditions: &[&Array2<f64>],
    real: &Array2<f64>,
    fake: &Array2<f64>,
    eps: &[f64],
    with_grads: bool,
) -> Result<(f64, Vec<Array2<f64>>)> {
    penalty_inputs(critic, conditions, real, fake, eps)?;
    let g = Graph::new();
    let p = if with_grads { critic.params.bind(&g) } else { critic.params.bind_frozen(&g) };
    let steps = window_steps(&g, conditions);
    let e = g.constant(Array2::from_shape_vec((eps.len(), 1), eps.to_vec()).expect("column"));
    let gp = graph_penalty(&g, critic, &p, &steps, g.constant(real.clone()), g.constant(fake.clone()), e);
    let grads = if with_grads { g.backward(gp, p.vars()).into_iter().map(|v| g.value(v)).collect() } else { Vec::new() };
    Ok((g.scalar(gp), grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_windows(n: usize, m: usize, k: usize, seed: u64) -> Vec<Array2<f64>> {
        let mut r = rng(seed);
        (0..n).map(|_| Array2::from_shape_simple_fn((m, k), || r.random::<f64>())).collect()
    }

    #[test]
    fn zero_weights_emit_output_bias() {
        let mut gen = Generator::new(3, 4, &CwganDims::default(), &mut rng(1));
        for t in gen.params.tensors.iter_mut() {
            t.fill(0.0);
        }
        let out_bias = gen.params.names.iter().position(|n| n == "gen.out.bias").unwrap();
        gen.params.tensors[out_bias] = ndarray::array![[0.1, -0.2, 0.3]];
        let w = random_windows(1, 4, 3, 2);
        assert_eq!(gen.forward(&w[0], &[0.5, 0.5, 0.5]).unwrap(), vec![0.1, -0.2, 0.3]);

        let mut critic = Critic::new(3, 4, &CwganDims::default(), &mut rng(1));
        for t in critic.params.tensors.iter_mut() {
            t.fill(0.0);
        }
        let last = critic.params.len() - 1;
        critic.params.tensors[last][[0, 0]] = 0.7;
        assert_eq!(critic.forward(&w[0], &[1.0, 0.0, 0.0]).unwrap(), 0.7);
    }

    #[test]
    fn batched_calls_match_single_calls() {
        let gen = Generator::new(2, 5, &CwganDims::default(), &mut rng(3));
        let critic = Critic::new(2, 5, &CwganDims::default(), &mut rng(4));
        let ws = random_windows(6, 5, 2, 5);
        let refs: Vec<&Array2<f64>> = ws.iter().collect();
        let noise = Array2::from_shape_fn((6, 2), |(i, j)| (i as f64 - j as f64) * 0.3);
        let batch = gen.forward_batch(&refs, &noise).unwrap();
        let scores = critic.forward_batch(&refs, &batch).unwrap();
        for (i, w) in ws.iter().enumerate() {
            let single = gen.forward(w, &noise.row(i).to_vec()).unwrap();
            assert_eq!(single, batch.row(i).to_vec());
            assert_eq!(critic.forward(w, &single).unwrap(), scores[i]);
        }
        // determinism
        assert_eq!(gen.forward_batch(&refs, &noise).unwrap(), batch);
    }

    #[test]
    fn shape_mismatches_are_contract_errors() {
        let gen = Generator::new(2, 5, &CwganDims::default(), &mut rng(3));
        let w = Array2::zeros((4, 2));
        assert!(matches!(gen.forward(&w, &[0.0, 0.0]), Err(Error::Contract(_))));
        let w = Array2::zeros((5, 2));
        assert!(matches!(gen.forward(&w, &[0.0]), Err(Error::Contract(_))));
    }

    /// One-unit critic with every weight zeroed, so its score is constant.
    fn zero_critic(features: usize) -> Critic {
        let dims = CwganDims { critic_hidden: 1, critic_dense: vec![], ..Default::default() };
        let mut c = Critic::new(features, 2, &dims, &mut rng(0));
        for t in c.params.tensors.iter_mut() {
            t.fill(0.0);
        }
        c
    }

    #[test]
    fn constant_critic_has_unit_penalty() {
        let c = zero_critic(2);
        let cond = Array2::from_elem((2, 2), 0.3);
        let gp = gradient_penalty(&c, &cond, &[0.1, 0.2], &[0.9, 0.4], 0.37).unwrap();
        assert!((gp - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unit_gradient_critic_has_zero_penalty() {
        // zero condition keeps the cell empty until the candidate step, where
        // h = σ(0)·tanh(σ(0)·tanh(1e-4·x0)) ≈ 0.25e-4·x0
        let mut c = zero_critic(2);
        let cond = Array2::from_elem((2, 2), 0.0);
        let wi = c.params.names.iter().position(|n| n == "critic.lstm.w_input").unwrap();
        c.params.tensors[wi][[0, 2]] = 1e-4;
        let out_w = c.params.names.iter().position(|n| n == "critic.out.weight").unwrap();
        c.params.tensors[out_w][[0, 0]] = 1.0 / (0.25 * 1e-4);
        let gp = gradient_penalty(&c, &cond, &[0.0, 0.0], &[1e-3, 0.5], 0.5).unwrap();
        assert!(gp < 1e-12, "{gp}");
    }

    #[test]
    fn penalty_gradients_match_finite_differences() {
        let dims = CwganDims { critic_hidden: 2, critic_dense: vec![3], ..Default::default() };
        let mut critic = Critic::new(2, 3, &dims, &mut rng(7));
        assert!(critic.params.count() <= 200);
        let ws = random_windows(4, 3, 2, 8);
        let refs: Vec<&Array2<f64>> = ws.iter().collect();
        let mut r = rng(9);
        let real = Array2::from_shape_simple_fn((4, 2), || r.random::<f64>());
        let fake = Array2::from_shape_simple_fn((4, 2), || r.random::<f64>());
        let eps = [0.2, 0.5, 0.7, 0.9];
        let (_, grads) = gradient_penalty_grads(&critic, &refs, &real, &fake, &eps, true).unwrap();
        let flat: Vec<f64> = grads.iter().flat_map(|t| t.iter().copied()).collect();
        let h = 1e-5;
        for i in 0..critic.params.count() {
            let base = critic.params.flat_get(i);
            critic.params.flat_set(i, base + h);
            let up = gradient_penalty_batch(&critic, &refs, &real, &fake, &eps).unwrap();
            critic.params.flat_set(i, base - h);
            let down = gradient_penalty_batch(&critic, &refs, &real, &fake, &eps).unwrap();
            critic.params.flat_set(i, base);
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - flat[i]).abs() / fd.abs().max(flat[i].abs()).max(1e-6);
            assert!(rel < 1e-4, "param {i}: analytic {} vs fd {fd}", flat[i]);
        }
    }
}
