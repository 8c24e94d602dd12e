use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Provenance, TimeSeriesDataset, Unit};
use crate::error::{Error, Result};

/// Stationary vector autoregression `x_t = Σ_i A_i x_{t-i} + σ ε_t` with
/// `ε_t ~ N(0, I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArSpec {
    /// `A_1 .. A_p`, each `K × K`.
    pub lags: Vec<Array2<f64>>,
    pub noise_std: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_burn_in() -> usize {
    200
}

impl ArSpec {
    pub fn ar1(phi: f64, noise_std: f64) -> Self {
        Self { lags: vec![Array2::from_elem((1, 1), phi)], noise_std, burn_in: default_burn_in() }
    }

    /// Parses `ar1:phi=0.9[,sigma=1]`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, args) = text.split_once(':').unwrap_or((text, ""));
        let mut phi = None;
        let mut sigma = 1.0;
        for kv in args.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::config(format!("expected key=value in process spec, got {kv:?}")))?;
            let v: f64 = v.parse().map_err(|_| Error::config(format!("bad number {v:?} in process spec")))?;
            match k {
                "phi" => phi = Some(v),
                "sigma" => sigma = v,
                other => return Err(Error::config(format!("unknown process parameter {other:?}"))),
            }
        }
        match kind {
            "ar1" => {
                let phi = phi.ok_or_else(|| Error::config("ar1 process needs phi"))?;
                let spec = Self::ar1(phi, sigma);
                spec.validate()?;
                Ok(spec)
            }
            other => Err(Error::config(format!("unknown process kind {other:?}"))),
        }
    }

    pub fn num_features(&self) -> usize {
        self.lags.first().map(|a| a.nrows()).unwrap_or(0)
    }

    pub fn order(&self) -> usize {
        self.lags.len()
    }

    /// `Kp × Kp` companion matrix of the recursion.
    pub fn companion(&self) -> DMatrix<f64> {
        let (k, p) = (self.num_features(), self.order());
        let mut c = DMatrix::zeros(k * p, k * p);
        for (i, a) in self.lags.iter().enumerate() {
            for r in 0..k {
                for col in 0..k {
                    c[(r, i * k + col)] = a[[r, col]];
                }
            }
        }
        for r in k..k * p {
            c[(r, r - k)] = 1.0;
        }
        c
    }

    pub fn spectral_radius(&self) -> f64 {
        self.companion().complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_features();
        if k == 0 || self.lags.iter().any(|a| a.shape() != [k, k]) {
            return Err(Error::config("AR lag matrices must be nonempty and K×K"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::config("noise level must be finite and nonnegative"));
        }
        let rho = self.spectral_radius();
        if !(rho < 1.0) {
            return Err(Error::config(format!("AR process is not stationary (spectral radius {rho:.4})")));
        }
        Ok(())
    }

    /// `E[x_{T+h} | x_1..x_T]` given at least `p` rows of history.
    pub fn conditional_mean(&self, history: &Array2<f64>, horizon: usize) -> Result<Vec<f64>> {
        let p = self.order();
        if history.nrows() < p || history.ncols() != self.num_features() {
            return Err(Error::contract("history shorter than the AR order or wrong width"));
        }
        let mut recent: Vec<Array1<f64>> = (0..p).map(|i| history.row(history.nrows() - 1 - i).to_owned()).collect();
        for _ in 0..horizon {
            let next = self.lags.iter().zip(&recent).map(|(a, x)| a.dot(x)).fold(
                Array1::zeros(self.num_features()),
                |acc, v| acc + v,
            );
            recent.insert(0, next);
            recent.truncate(p);
        }
        Ok(recent[0].to_vec())
    }

    /// Per-feature variance of the `h`-step forecast error, `σ² Σ_{j<h} diag(Ψ_j Ψ_jᵀ)`.
    pub fn forecast_error_variance(&self, horizon: usize) -> Vec<f64> {
        let k = self.num_features();
        let mut psi: Vec<Array2<f64>> = vec![Array2::eye(k)];
        for j in 1..horizon {
            let mut next = Array2::zeros((k, k));
            for (i, a) in self.lags.iter().enumerate() {
                if j > i {
                    next = next + a.dot(&psi[j - 1 - i]);
                }
            }
            psi.push(next);
        }
        let s2 = self.noise_std * self.noise_std;
        (0..k)
            .map(|f| s2 * psi.iter().map(|m| m.row(f).iter().map(|v| v * v).sum::<f64>()).sum::<f64>())
            .collect()
    }
}

/// Simulates `units` independent series of length `length` after burn-in.
pub fn synth_ar_process(spec: &ArSpec, units: usize, length: usize, seed: u64) -> Result<TimeSeriesDataset> {
    spec.validate()?;
    if length == 0 || units == 0 {
        return Err(Error::config("need at least one unit of positive length"));
    }
    let (k, p) = (spec.num_features(), spec.order());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = spec.burn_in + length;
    let mut out = Vec::with_capacity(units);
    for u in 0..units {
        let mut series = Array2::<f64>::zeros((total + p, k));
        for t in p..total + p {
            let mut x: Array1<f64> = (0..k)
                .map(|_| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    spec.noise_std * e
                })
                .collect();
            for (i, a) in spec.lags.iter().enumerate() {
                x = x + a.dot(&series.row(t - 1 - i));
            }
            series.row_mut(t).assign(&x);
        }
        let values = series.slice(ndarray::s![p + spec.burn_in.., ..]).to_owned();
        out.push(Unit::new(format!("unit-{u:03}"), values));
    }
    let names = (0..k).map(|f| format!("x{f}")).collect();
    let mut ds = TimeSeriesDataset::new(out, names, "synthetic step")?;
    ds.provenance = Provenance { source: "synthetic:var".into(), seed: Some(seed), split: None };
    ds.process = Some(spec.clone());
    Ok(ds)
}

/// Noisy sinusoids with one random phase per unit. Feature `j` is shifted by
/// `jπ/K`: `x_{t,j} = 0.5 + 0.4·sin(2πt/period + φ_u + jπ/K) + σ·ε`.
pub fn synth_sinusoid(
    units: usize,
    length: usize,
    features: usize,
    period: f64,
    noise_std: f64,
    seed: u64,
) -> Result<TimeSeriesDataset> {
    if length == 0 || units == 0 || features == 0 || !(period > 0.0) {
        return Err(Error::config("need units, length, features and a positive period"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = (0..units)
        .map(|u| {
            let phase = rng.random::<f64>() * std::f64::consts::TAU;
            let mut values = Array2::zeros((length, features));
            for t in 0..length {
                for j in 0..features {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    let shift = j as f64 * std::f64::consts::PI / features as f64;
                    values[[t, j]] =
                        0.5 + 0.4 * (std::f64::consts::TAU * t as f64 / period + phase + shift).sin() + noise_std * e;
                }
            }
            Unit::new(format!("sine-{u:03}"), values)
        })
        .collect();
    let names = (0..features).map(|f| format!("x{f}")).collect();
    let mut ds = TimeSeriesDataset::new(out, names, "synthetic step")?;
    ds.provenance = Provenance { source: "synthetic:sinusoid".into(), seed: Some(seed), split: None };
    Ok(ds)
}
