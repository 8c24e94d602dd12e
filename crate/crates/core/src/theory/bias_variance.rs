use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{make_windows, synth_ar_process, ArSpec, WindowedDataset};
use crate::error::{Error, Result};
use crate::predictor::{train_predictor, AttentionConfig, PredictorHyper, TargetSpec};
use crate::seed::derive_seed;
use crate::strategies::DirectModel;

/// Fits one direct model for a horizon and target feature.
pub trait HorizonTrainer: Sync {
    fn train(&self, set: &WindowedDataset, horizon: usize, target: usize, seed: u64) -> Result<Box<dyn DirectModel>>;
}

/// Ordinary least squares on the flattened window plus an intercept.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearTrainer {
    /// Ridge added to the normal equations' diagonal (not to the intercept).
    pub ridge: f64,
}

#[derive(Debug, Clone)]
pub struct LinearDirect {
    spec: TargetSpec,
    /// Intercept first, then one weight per window entry in row-major order.
    pub coef: Vec<f64>,
}

impl DirectModel for LinearDirect {
    fn target_spec(&self) -> TargetSpec {
        self.spec
    }

    fn predict_direct(&self, windows: &[&Array2<f64>]) -> Result<Vec<f64>> {
        windows
            .iter()
            .map(|w| {
                if w.len() + 1 != self.coef.len() {
                    return Err(Error::contract("window size does not match the fitted model"));
                }
                Ok(self.coef[0] + w.iter().zip(&self.coef[1..]).map(|(x, c)| x * c).sum::<f64>())
            })
            .collect()
    }
}

impl HorizonTrainer for LinearTrainer {
    fn train(&self, set: &WindowedDataset, horizon: usize, target: usize, _seed: u64) -> Result<Box<dyn DirectModel>> {
        if set.is_empty() {
            return Err(Error::data("no training windows"));
        }
        let y = set.targets(horizon, target)?;
        let p = set.samples[0].window.len() + 1;
        let mut xtx = DMatrix::<f64>::zeros(p, p);
        let mut xty = DVector::<f64>::zeros(p);
        let mut row = vec![0.0; p];
        for (s, &t) in set.samples.iter().zip(&y) {
            row[0] = 1.0;
            row[1..].iter_mut().zip(s.window.iter()).for_each(|(r, &v)| *r = v);
            for i in 0..p {
                xty[i] += row[i] * t;
                for j in 0..p {
                    xtx[(i, j)] += row[i] * row[j];
                }
            }
        }
        for i in 1..p {
            xtx[(i, i)] += self.ridge;
        }
        let coef = xtx
            .cholesky()
            .ok_or_else(|| Error::Training { message: "singular design matrix".into(), trace: Default::default() })?
            .solve(&xty);
        Ok(Box::new(LinearDirect { spec: TargetSpec::direct(horizon, target), coef: coef.iter().copied().collect() }))
    }
}

/// The attention predictor trained as a direct model.
#[derive(Debug, Clone, Default)]
pub struct TransformerTrainer {
    pub config: AttentionConfig,
    pub hyper: PredictorHyper,
}

impl HorizonTrainer for TransformerTrainer {
    fn train(&self, set: &WindowedDataset, horizon: usize, target: usize, seed: u64) -> Result<Box<dyn DirectModel>> {
        let hyper = PredictorHyper { seed, ..self.hyper.clone() };
        let (model, _) = train_predictor(set, TargetSpec::direct(horizon, target), &self.config, &hyper, None)?;
        Ok(Box::new(model))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasVarianceConfig {
    pub window_len: usize,
    pub horizons: Vec<usize>,
    /// Number of independently trained models `R`.
    pub ensemble_size: usize,
    pub train_units: usize,
    pub train_len: usize,
    /// Independent test windows, one per simulated unit.
    pub test_points: usize,
    pub target: usize,
    pub seed: u64,
}

impl Default for BiasVarianceConfig {
    fn default() -> Self {
        Self {
            window_len: 10,
            horizons: vec![1, 4, 8],
            ensemble_size: 10,
            train_units: 20,
            train_len: 200,
            test_points: 20000,
            target: 0,
            seed: 0,
        }
    }
}

/// Noise, bias and variance of one horizon, with the measured MSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonDecomposition {
    pub horizon: usize,
    pub noise: f64,
    pub bias: f64,
    pub variance: f64,
    pub sum: f64,
    pub mse: f64,
    /// Standard error of `mse` over test points.
    pub mse_se: f64,
    pub replicates: usize,
    pub dropped: usize,
}

impl HorizonDecomposition {
    /// `|Z + B + V − MSE|` in units of the MSE standard error.
    pub fn closure_gap(&self) -> f64 {
        (self.sum - self.mse).abs() / self.mse_se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVarianceReport {
    pub process: String,
    pub ensemble_size: usize,
    pub test_points: usize,
    pub horizons: Vec<HorizonDecomposition>,
}

impl BiasVarianceReport {
    pub fn horizon(&self, h: usize) -> Option<&HorizonDecomposition> {
        self.horizons.iter().find(|d| d.horizon == h)
    }

    /// Whether any replicate was dropped after a training failure.
    pub fn reduced(&self) -> bool {
        self.horizons.iter().any(|d| d.dropped > 0)
    }
}

/// Splits the squared error of each horizon into noise, bias and variance.
///
/// Each of the `R` replicates is trained on its own fresh draw of the
/// process. The ensemble mean stands in for the expectation over trained
/// parameters; the conditional mean of the process is exact.
pub fn empirical_bias_variance(
    process: &ArSpec,
    config: &BiasVarianceConfig,
    trainer: &dyn HorizonTrainer,
) -> Result<BiasVarianceReport> {
    process.validate()?;
    if config.ensemble_size < 2 {
        return Err(Error::config("the ensemble needs at least two replicates"));
    }
    if config.horizons.is_empty() || config.horizons.contains(&0) || config.window_len < process.order() {
        return Err(Error::config("horizons must be positive and the window at least the AR order"));
    }
    if config.target >= process.num_features() || config.test_points == 0 {
        return Err(Error::config("target feature out of range or no test points"));
    }
    let max_h = *config.horizons.iter().max().expect("nonempty");
    let test_units = synth_ar_process(process, config.test_points, config.window_len + max_h, derive_seed(config.seed, &["test"]))?;
    let test = make_windows(&test_units, config.window_len, &config.horizons)?.0;
    let windows = test.windows();
    let n = test.len();

    let fits: Vec<Vec<Option<Vec<f64>>>> = (0..config.ensemble_size)
        .into_par_iter()
        .map(|r| {
            let rep = r.to_string();
            let draw = synth_ar_process(process, config.train_units, config.train_len, derive_seed(config.seed, &["train", &rep]))
                .and_then(|d| Ok(make_windows(&d, config.window_len, &config.horizons)?.0));
            config
                .horizons
                .iter()
                .map(|&h| {
                    let set = draw.as_ref().ok()?;
                    let seed = derive_seed(config.seed, &["fit", &rep, &h.to_string()]);
                    let pred = trainer
                        .train(set, h, config.target, seed)
                        .and_then(|m| m.predict_direct(&windows));
                    match pred {
                        Ok(p) if p.len() == n && p.iter().all(|v| v.is_finite()) => Some(p),
                        Ok(_) => {
                            log::warn!("replicate {r} horizon {h}: non-finite predictions, dropped");
                            None
                        }
                        Err(e) => {
                            log::warn!("replicate {r} horizon {h}: {e}, dropped");
                            None
                        }
                    }
                })
                .collect()
        })
        .collect();

    let mut horizons = Vec::with_capacity(config.horizons.len());
    for (hi, &h) in config.horizons.iter().enumerate() {
        let preds: Vec<&Vec<f64>> = fits.iter().filter_map(|f| f[hi].as_ref()).collect();
        let r = preds.len();
        if r < 2 {
            return Err(Error::Training {
                message: format!("fewer than two replicates trained at horizon {h}"),
                trace: Default::default(),
            });
        }
        let truth = test.targets(h, config.target)?;
        let (mut z, mut b, mut v) = (0.0, 0.0, 0.0);
        let mut errors = Vec::with_capacity(n);
        for (i, s) in test.samples.iter().enumerate() {
            let u = process.conditional_mean(&s.window, h)?[config.target];
            let x = truth[i];
            let mean = preds.iter().map(|p| p[i]).sum::<f64>() / r as f64;
            z += (x - u).powi(2);
            b += (u - mean).powi(2);
            v += preds.iter().map(|p| (p[i] - mean).powi(2)).sum::<f64>() / r as f64;
            errors.push(preds.iter().map(|p| (x - p[i]).powi(2)).sum::<f64>() / r as f64);
        }
        let nf = n as f64;
        let mse = errors.iter().sum::<f64>() / nf;
        let spread = errors.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (nf - 1.0).max(1.0);
        let (z, b, v) = (z / nf, b / nf, v / nf);
        horizons.push(HorizonDecomposition {
            horizon: h,
            noise: z,
            bias: b,
            variance: v,
            sum: z + b + v,
            mse,
            mse_se: (spread / nf).sqrt(),
            replicates: r,
            dropped: config.ensemble_size - r,
        });
    }
    Ok(BiasVarianceReport { process: describe(process), ensemble_size: config.ensemble_size, test_points: n, horizons })
}

fn describe(process: &ArSpec) -> String {
    format!(
        "AR({}) with {} feature(s), noise std {}, spectral radius {:.4}",
        process.order(),
        process.num_features(),
        process.noise_std,
        process.spectral_radius()
    )
}

/// `σ² (1 − φ^{2N}) / (1 − φ²)`, the `N`-step forecast error variance of an AR(1).
pub fn ar1_noise(phi: f64, sigma: f64, horizon: usize) -> f64 {
    sigma * sigma * (1.0 - phi.powi(2 * horizon as i32)) / (1.0 - phi * phi)
}
