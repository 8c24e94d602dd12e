use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_windows, graph_penalty, window_steps, Critic, CwganDims, Generator};
use crate::data::WindowedDataset;
use crate::error::{Error, Result, TrainingTrace};
use crate::nn::{Adam, Bound, Graph, Var};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CwganHyper {
    /// Gradient-penalty weight λ.
    pub lambda_gp: f64,
    /// Supervised-term weight η; zero gives a plain conditional WGAN-GP.
    pub eta_sup: f64,
    pub critic_steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Adam moment decay rates; the defaults are the usual WGAN-GP pair.
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub seed: u64,
}

impl Default for CwganHyper {
    fn default() -> Self {
        Self {
            lambda_gp: 5.0,
            eta_sup: 1.0,
            critic_steps: 5,
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 1000,
            adam_beta1: 0.5,
            adam_beta2: 0.9,
            seed: 0,
        }
    }
}

impl CwganHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_gp >= 0.0 && self.eta_sup >= 0.0 && self.learning_rate > 0.0) {
            return Err(Error::config("lambda_gp and eta_sup must be nonnegative, learning_rate positive"));
        }
        if self.critic_steps == 0 || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::config("critic_steps, batch_size and epochs must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPair {
    pub critic: f64,
    pub generator: f64,
}

/// `mean D(fake) − mean D(real) + λ·mean penalty`.
fn critic_objective(
    g: &Graph,
    critic: &Critic,
    pc: &Bound,
    steps: &[Var],
    real: Var,
    fake: Var,
    eps: Var,
    lambda: f64,
) -> Var {
    let d_fake = g.mean(critic.graph_forward(g, pc, steps, fake));
    let d_real = g.mean(critic.graph_forward(g, pc, steps, real));
    let gap = g.sub(d_fake, d_real);
    if lambda == 0.0 {
        return gap;
    }
    g.add(gap, g.scale(graph_penalty(g, critic, pc, steps, real, fake, eps), lambda))
}

/// `mean ‖real − fake‖₂` over the batch.
fn supervised_term(g: &Graph, real: Var, fake: Var) -> Var {
    g.mean(g.sqrt(g.sum_cols(g.square(g.sub(real, fake)))))
}

/// `−mean D(fake) + η·mean ‖real − fake‖₂`; the adversarial part is dropped
/// when `critic` is `None`.
fn generator_objective(g: &Graph, critic: Option<(&Critic, &Bound)>, steps: &[Var], real: Var, fake: Var, eta: f64) -> Var {
    let adv = critic.map(|(c, pc)| g.scale(g.mean(c.graph_forward(g, pc, steps, fake)), -1.0));
    let sup = (eta > 0.0).then(|| g.scale(supervised_term(g, real, fake), eta));
    match (adv, sup) {
        (Some(a), Some(s)) => g.add(a, s),
        (Some(a), None) => a,
        (None, Some(s)) => s,
        (None, None) => g.constant(Array2::zeros((1, 1))),
    }
}

/// Both losses for one batch with explicit noise and interpolation weights.
pub fn cwgan_losses(
    generator: &Generator,
    critic: &Critic,
    conditions: &[&Array2<f64>],
    real: &Array2<f64>,
    noise: &Array2<f64>,
    eps: &[f64],
    hyper: &CwganHyper,
) -> Result<LossPair> {
    check_windows(conditions, generator.window_len, generator.features)?;
    let shape = (conditions.len(), generator.features);
    if real.dim() != shape || noise.dim() != shape || eps.len() != conditions.len() {
        return Err(Error::contract("real, noise and epsilon must match the batch"));
    }
    let g = Graph::new();
    let pg = generator.params.bind_frozen(&g);
    let pc = critic.params.bind_frozen(&g);
    let steps = window_steps(&g, conditions);
    let fake = generator.graph_forward(&g, &pg, &steps, g.constant(noise.clone()));
    let real = g.constant(real.clone());
    let e = g.constant(Array2::from_shape_vec((eps.len(), 1), eps.to_vec()).expect("column"));
    let c = critic_objective(&g, critic, &pc, &steps, real, fake, e, hyper.lambda_gp);
    let gl = generator_objective(&g, Some((critic, &pc)), &steps, real, fake, hyper.eta_sup);
    Ok(LossPair { critic: g.scalar(c), generator: g.scalar(gl) })
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

fn grads_of(g: &Graph, loss: Var, p: &Bound) -> Vec<Array2<f64>> {
    g.backward(loss, p.vars()).into_iter().map(|v| g.value(v)).collect()
}

struct Prepared<'a> {
    windows: Vec<&'a Array2<f64>>,
    next: Vec<&'a [f64]>,
    features: usize,
    window_len: usize,
}

fn prepare(set: &WindowedDataset) -> Result<Prepared<'_>> {
    if set.is_empty() {
        return Err(Error::data("generator training set has no windows"));
    }
    let next = set.samples.iter().map(|s| s.target(1)).collect::<Result<Vec<_>>>()?;
    Ok(Prepared { windows: set.windows(), next, features: set.num_features(), window_len: set.window_len })
}

fn step_batch<'a>(p: &Prepared<'a>, idx: &[usize]) -> (Vec<&'a Array2<f64>>, Array2<f64>) {
    let ws = idx.iter().map(|&i| p.windows[i]).collect();
    let real = Array2::from_shape_fn((idx.len(), p.features), |(b, f)| p.next[idx[b]][f]);
    (ws, real)
}

fn diverged(message: &str, trace: &TrainingTrace) -> Error {
    Error::Training { message: message.to_string(), trace: trace.clone() }
}

fn run(
    set: &WindowedDataset,
    dims: &CwganDims,
    hyper: &CwganHyper,
    adversarial: bool,
) -> Result<(Generator, Critic, TrainingTrace)> {
    hyper.validate()?;
    dims.validate()?;
    let data = prepare(set)?;
    let mut init = ChaCha8Rng::seed_from_u64(derive_seed(hyper.seed, &["cwgan", "init"]));
    let mut generator = Generator::new(data.features, data.window_len, dims, &mut init);
    let mut critic = Critic::new(data.features, data.window_len, dims, &mut init);
    let mut order_rng = ChaCha8Rng::seed_from_u64(derive_seed(hyper.seed, &["cwgan", "order"]));
    let mut critic_rng = ChaCha8Rng::seed_from_u64(derive_seed(hyper.seed, &["cwgan", "critic"]));
    let mut gen_rng = ChaCha8Rng::seed_from_u64(derive_seed(hyper.seed, &["cwgan", "generator"]));
    let mut opt_g = Adam::new(&generator.params, hyper.learning_rate);
    let mut opt_c = Adam::new(&critic.params, hyper.learning_rate);
    for opt in [&mut opt_g, &mut opt_c] {
        opt.beta1 = hyper.adam_beta1;
        opt.beta2 = hyper.adam_beta2;
    }
    let mut trace = TrainingTrace::default();
    let mut order: Vec<usize> = (0..data.windows.len()).collect();
    let mut batches_seen = 0usize;
    let mut last_gen = 0.0;

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut order_rng);
        let (mut c_sum, mut c_n, mut g_sum, mut g_n) = (0.0, 0usize, 0.0, 0usize);
        for idx in order.chunks(hyper.batch_size) {
            let (ws, real_values) = step_batch(&data, idx);
            let b = idx.len();

            if adversarial {
                let noise = normal_matrix(&mut critic_rng, b, data.features);
                let fake_values = generator.forward_batch(&ws, &noise)?;
                let eps = Array2::from_shape_simple_fn((b, 1), || critic_rng.random::<f64>());
                let g = Graph::new();
                let pc = critic.params.bind(&g);
                let steps = window_steps(&g, &ws);
                let (real, fake, e) = (g.constant(real_values.clone()), g.constant(fake_values), g.constant(eps));
                let loss = critic_objective(&g, &critic, &pc, &steps, real, fake, e, hyper.lambda_gp);
                let value = g.scalar(loss);
                if !value.is_finite() {
                    return Err(diverged(&format!("critic loss became {value} in epoch {epoch}"), &trace));
                }
                opt_c.step(&mut critic.params, &grads_of(&g, loss, &pc));
                c_sum += value;
                c_n += 1;
            }

            batches_seen += 1;
            if batches_seen % hyper.critic_steps == 0 {
                let noise = normal_matrix(&mut gen_rng, b, data.features);
                let g = Graph::new();
                let pg = generator.params.bind(&g);
                let pc = critic.params.bind_frozen(&g);
                let steps = window_steps(&g, &ws);
                let fake = generator.graph_forward(&g, &pg, &steps, g.constant(noise));
                let real = g.constant(real_values);
                let adv = adversarial.then_some((&critic, &pc));
                let loss = generator_objective(&g, adv, &steps, real, fake, hyper.eta_sup);
                let value = g.scalar(loss);
                if !value.is_finite() {
                    return Err(diverged(&format!("generator loss became {value} in epoch {epoch}"), &trace));
                }
                opt_g.step(&mut generator.params, &grads_of(&g, loss, &pg));
                g_sum += value;
                g_n += 1;
            }
        }
        if g_n > 0 {
            last_gen = g_sum / g_n as f64;
        }
        let c_mean = if c_n > 0 { c_sum / c_n as f64 } else { 0.0 };
        trace.push(epoch, c_mean, last_gen);
        if (epoch + 1) % 100 == 0 {
            log::debug!("cwgan epoch {}: critic {c_mean:.5}, generator {last_gen:.5}", epoch + 1);
        }
    }
    if !generator.params.all_finite() || !critic.params.all_finite() {
        return Err(diverged("parameters became non-finite", &trace));
    }
    Ok((generator, critic, trace))
}

/// Alternating training: one generator update after every `critic_steps`
/// critic updates, each update on its own minibatch. Deterministic per seed.
pub fn train_cwgan(
    set: &WindowedDataset,
    dims: &CwganDims,
    hyper: &CwganHyper,
) -> Result<(Generator, Critic, TrainingTrace)> {
    run(set, dims, hyper, true)
}

/// The same generator, schedule and noise trained on the supervised term
/// alone (no critic); a reference point for the adversarial model.
pub fn train_supervised_generator(
    set: &WindowedDataset,
    dims: &CwganDims,
    hyper: &CwganHyper,
) -> Result<(Generator, TrainingTrace)> {
    let hyper = CwganHyper { eta_sup: if hyper.eta_sup > 0.0 { hyper.eta_sup } else { 1.0 }, ..hyper.clone() };
    run(set, dims, &hyper, false).map(|(g, _, t)| (g, t))
}
