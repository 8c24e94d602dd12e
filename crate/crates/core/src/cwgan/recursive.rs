use ndarray::{concatenate, s, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::Generator;
use crate::error::{Error, Result};

/// Anything that maps a window plus a noise vector to the next K-vector.
pub trait StepGenerator {
    fn num_features(&self) -> usize;

    /// One generated row per window; `noise` is `windows.len() × K`.
    fn generate_batch(&self, windows: &[&Array2<f64>], noise: &Array2<f64>) -> Result<Array2<f64>>;
}

impl StepGenerator for Generator {
    fn num_features(&self) -> usize {
        self.features
    }

    fn generate_batch(&self, windows: &[&Array2<f64>], noise: &Array2<f64>) -> Result<Array2<f64>> {
        self.forward_batch(windows, noise)
    }
}

/// Rows per batched generator call.
const CHUNK: usize = 512;

fn draw_noise(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| StandardNormal.sample(rng)).collect()
}

fn shift_in(window: &Array2<f64>, row: ndarray::ArrayView1<f64>) -> Array2<f64> {
    let mut next = Array2::zeros(window.raw_dim());
    let m = window.nrows();
    next.slice_mut(s![..m - 1, ..]).assign(&window.slice(s![1.., ..]));
    next.row_mut(m - 1).assign(&row);
    next
}

/// Generates `steps` rows after `window`, each conditioned on the sliding
/// window of the `M` most recent real or generated rows. Fresh standard
/// normal noise is drawn for every step from a stream seeded by `seed`.
pub fn generate_recursive<G>(generator: &G, window: &Array2<f64>, steps: usize, seed: u64) -> Result<Array2<f64>>
where
    G: StepGenerator + Sync + ?Sized,
{
    Ok(generate_recursive_batch(generator, &[window], steps, &[seed])?.remove(0))
}

/// Batched [`generate_recursive`]; window `i` uses noise seeded by `seeds[i]`,
/// so results do not depend on how windows are grouped.
pub fn generate_recursive_batch<G>(
    generator: &G,
    windows: &[&Array2<f64>],
    steps: usize,
    seeds: &[u64],
) -> Result<Vec<Array2<f64>>>
where
    G: StepGenerator + Sync + ?Sized,
{
    if windows.len() != seeds.len() {
        return Err(Error::contract("one noise seed per window is required"));
    }
    let k = generator.num_features();
    for w in windows {
        if w.ncols() != k || w.nrows() == 0 {
            return Err(Error::contract(format!("window of shape {:?} does not have {k} features", w.dim())));
        }
    }
    let chunks: Vec<Vec<Array2<f64>>> = windows
        .par_chunks(CHUNK)
        .zip(seeds.par_chunks(CHUNK))
        .map(|(ws, ss)| {
            let mut rngs: Vec<ChaCha8Rng> = ss.iter().map(|&s| ChaCha8Rng::seed_from_u64(s)).collect();
            let mut current: Vec<Array2<f64>> = ws.iter().map(|w| (*w).clone()).collect();
            let mut blocks: Vec<Array2<f64>> = ws.iter().map(|_| Array2::zeros((steps, k))).collect();
            for step in 0..steps {
                let mut noise = Array2::zeros((ws.len(), k));
                for (i, rng) in rngs.iter_mut().enumerate() {
                    noise.row_mut(i).assign(&ndarray::Array1::from(draw_noise(rng, k)));
                }
                let refs: Vec<&Array2<f64>> = current.iter().collect();
                let out = generator.generate_batch(&refs, &noise)?;
                if out.dim() != (ws.len(), k) {
                    return Err(Error::contract(format!("generator returned {:?}, expected K = {k} columns", out.dim())));
                }
                for i in 0..ws.len() {
                    blocks[i].row_mut(step).assign(&out.row(i));
                    current[i] = shift_in(&current[i], out.row(i));
                }
            }
            Ok(blocks)
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// The window a model sees after `block` has been generated past `window`:
/// the last `M` rows of their concatenation.
pub fn effective_window(window: &Array2<f64>, block: &Array2<f64>) -> Array2<f64> {
    let m = window.nrows();
    let joined = concatenate(Axis(0), &[window.view(), block.view()]).expect("same width");
    joined.slice(s![joined.nrows() - m.min(joined.nrows()).., ..]).to_owned()
}
