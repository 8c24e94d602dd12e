//! Direct, iterative and generative forecasting, and seed-replicated comparisons.

mod compare;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cwgan::{effective_window, generate_recursive_batch, StepGenerator};
use crate::data::{Sample, WindowedDataset};
use crate::error::{Error, Result};
use crate::predictor::{predict_batch, LstmBaseline, Regressor, Target, TargetSpec, Transformer};
use crate::seed::derive_seed;

pub use compare::{
    run_comparison, CellSummary, ComparisonConfig, ExperimentReport, IterativeModel, MetricSummary, ReplicateRecord, SplitMode,
    StrategyKind, REPORT_SCHEMA_VERSION,
};

/// A model that maps a window straight to one target value.
pub trait DirectModel: Sync {
    fn target_spec(&self) -> TargetSpec;
    fn predict_direct(&self, windows: &[&Array2<f64>]) -> Result<Vec<f64>>;
}

/// A model that maps a window to the next row (all K features).
pub trait OneStepModel: Sync {
    fn num_features(&self) -> usize;
    fn predict_step(&self, windows: &[&Array2<f64>]) -> Result<Array2<f64>>;
}

fn direct_from_regressor<R: Regressor>(model: &R, spec: TargetSpec, windows: &[&Array2<f64>]) -> Result<Vec<f64>> {
    if !matches!(spec.target, Target::Feature(_)) {
        return Err(Error::contract("model emits a full row, not a single target"));
    }
    Ok(predict_batch(model, windows)?.column(0).to_vec())
}

impl DirectModel for Transformer {
    fn target_spec(&self) -> TargetSpec {
        self.spec
    }

    fn predict_direct(&self, windows: &[&Array2<f64>]) -> Result<Vec<f64>> {
        direct_from_regressor(self, self.spec, windows)
    }
}

impl DirectModel for LstmBaseline {
    fn target_spec(&self) -> TargetSpec {
        self.spec
    }

    fn predict_direct(&self, windows: &[&Array2<f64>]) -> Result<Vec<f64>> {
        direct_from_regressor(self, self.spec, windows)
    }
}

impl OneStepModel for Transformer {
    fn num_features(&self) -> usize {
        self.spec.outputs(self.features)
    }

    fn predict_step(&self, windows: &[&Array2<f64>]) -> Result<Array2<f64>> {
        predict_batch(self, windows)
    }
}

impl OneStepModel for LstmBaseline {
    fn num_features(&self) -> usize {
        self.spec.outputs(self.features)
    }

    fn predict_step(&self, windows: &[&Array2<f64>]) -> Result<Array2<f64>> {
        predict_batch(self, windows)
    }
}

/// Last-value forecaster: returns the window's final row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Persistence {
    pub feature: usize,
    pub horizon: usize,
    pub synthetic_len: usize,
}

impl DirectModel for Persistence {
    fn target_spec(&self) -> TargetSpec {
        TargetSpec { horizon: self.horizon, target: Target::Feature(self.feature), synthetic_len: self.synthetic_len }
    }

    fn predict_direct(&self, windows: &[&Array2<f64>]) -> Result<Vec<f64>> {
        windows
            .iter()
            .map(|w| {
                if self.feature >= w.ncols() || w.nrows() == 0 {
                    return Err(Error::contract("window too small for the persistence feature"));
                }
                Ok(w[[w.nrows() - 1, self.feature]])
            })
            .collect()
    }
}

fn check_direct(spec: TargetSpec, horizon: usize, synthetic_len: usize) -> Result<()> {
    if spec.horizon != horizon {
        return Err(Error::contract(format!(
            "model was trained for horizon {}, asked for {horizon}",
            spec.horizon
        )));
    }
    if spec.synthetic_len != synthetic_len {
        return Err(Error::contract(format!(
            "model was trained on windows with {} synthetic rows, asked for {synthetic_len}",
            spec.synthetic_len
        )));
    }
    Ok(())
}

/// One forward pass of a model trained at `horizon`.
pub fn forecast_direct<D: DirectModel + ?Sized>(model: &D, window: &Array2<f64>, horizon: usize) -> Result<f64> {
    Ok(forecast_direct_batch(model, &[window], horizon)?[0])
}

pub fn forecast_direct_batch<D: DirectModel + ?Sized>(
    model: &D,
    windows: &[&Array2<f64>],
    horizon: usize,
) -> Result<Vec<f64>> {
    check_direct(model.target_spec(), horizon, 0)?;
    model.predict_direct(windows)
}

/// Applies a one-step model `horizon` times, sliding each prediction into the
/// window, and returns `target` of the final step.
pub fn forecast_iterative<O: OneStepModel + ?Sized>(
    model: &O,
    window: &Array2<f64>,
    horizon: usize,
    target: usize,
) -> Result<f64> {
    Ok(forecast_iterative_batch(model, &[window], horizon, target)?[0])
}

pub fn forecast_iterative_batch<O: OneStepModel + ?Sized>(
    model: &O,
    windows: &[&Array2<f64>],
    horizon: usize,
    target: usize,
) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(Error::config("horizon must be at least 1"));
    }
    let k = windows.first().map(|w| w.ncols()).unwrap_or(0);
    if model.num_features() < k {
        return Err(Error::contract(format!(
            "one-step model emits {} features, windows have {k}",
            model.num_features()
        )));
    }
    if target >= k.max(1) {
        return Err(Error::contract(format!("target feature {target} out of range")));
    }
    let mut current: Vec<Array2<f64>> = windows.iter().map(|w| (*w).clone()).collect();
    let mut last = Array2::zeros((windows.len(), k));
    for _ in 0..horizon {
        let refs: Vec<&Array2<f64>> = current.iter().collect();
        last = model.predict_step(&refs)?;
        if last.ncols() < k || last.nrows() != windows.len() {
            return Err(Error::contract(format!("one-step model returned {:?}", last.dim())));
        }
        for (w, row) in current.iter_mut().zip(last.rows()) {
            *w = effective_window(w, &row.slice(ndarray::s![..k]).to_owned().insert_axis(ndarray::Axis(0)));
        }
    }
    Ok(last.column(target).to_vec())
}

/// Extends each window by `synthetic_len` generated rows and keeps the last
/// `M` rows. Window `i` draws noise from `seeds[i]`.
pub fn extend_windows<G: StepGenerator + Sync + ?Sized>(
    generator: &G,
    windows: &[&Array2<f64>],
    synthetic_len: usize,
    seeds: &[u64],
) -> Result<Vec<Array2<f64>>> {
    if synthetic_len == 0 {
        return Ok(windows.iter().map(|w| (*w).clone()).collect());
    }
    let blocks = generate_recursive_batch(generator, windows, synthetic_len, seeds)?;
    Ok(windows.par_iter().zip(blocks.par_iter()).map(|(w, b)| effective_window(w, b)).collect())
}

/// Noise seed for one sample's synthetic extension.
pub fn sample_seed(seed: u64, sample: &Sample) -> u64 {
    derive_seed(seed, &["synthetic", &sample.unit_id, &sample.start.to_string()])
}

/// Copy of `set` whose windows end in `synthetic_len` generated rows.
/// Targets keep their keys, which count from the real window's end.
pub fn rewrite_windows<G: StepGenerator + Sync + ?Sized>(
    generator: &G,
    set: &WindowedDataset,
    synthetic_len: usize,
    seed: u64,
) -> Result<WindowedDataset> {
    let seeds: Vec<u64> = set.samples.iter().map(|s| sample_seed(seed, s)).collect();
    let windows = extend_windows(generator, &set.windows(), synthetic_len, &seeds)?;
    let mut out = set.clone();
    for (s, w) in out.samples.iter_mut().zip(windows) {
        s.window = w;
    }
    Ok(out)
}

fn check_genf(synthetic_len: usize, horizon: usize) -> Result<()> {
    if synthetic_len >= horizon {
        return Err(Error::config(format!(
            "synthetic length {synthetic_len} must be below the horizon {horizon}"
        )));
    }
    Ok(())
}

/// Generates `synthetic_len` rows past `window`, then runs one direct pass of
/// a predictor trained on windows extended the same way.
pub fn forecast_genf<G, D>(
    generator: &G,
    predictor: &D,
    window: &Array2<f64>,
    synthetic_len: usize,
    horizon: usize,
    seed: u64,
) -> Result<f64>
where
    G: StepGenerator + Sync + ?Sized,
    D: DirectModel + ?Sized,
{
    Ok(forecast_genf_batch(generator, predictor, &[window], synthetic_len, horizon, &[seed])?[0])
}

pub fn forecast_genf_batch<G, D>(
    generator: &G,
    predictor: &D,
    windows: &[&Array2<f64>],
    synthetic_len: usize,
    horizon: usize,
    seeds: &[u64],
) -> Result<Vec<f64>>
where
    G: StepGenerator + Sync + ?Sized,
    D: DirectModel + ?Sized,
{
    check_genf(synthetic_len, horizon)?;
    check_direct(predictor.target_spec(), horizon, synthetic_len)?;
    if synthetic_len == 0 {
        return predictor.predict_direct(windows);
    }
    let extended = extend_windows(generator, windows, synthetic_len, seeds)?;
    let refs: Vec<&Array2<f64>> = extended.iter().collect();
    predictor.predict_direct(&refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::AttentionConfig;
    use ndarray::array;

    /// Emits the window's last row.
    struct Echo(usize);

    impl StepGenerator for Echo {
        fn num_features(&self) -> usize {
            self.0
        }

        fn generate_batch(&self, windows: &[&Array2<f64>], _noise: &Array2<f64>) -> Result<Array2<f64>> {
            Ok(Array2::from_shape_fn((windows.len(), self.0), |(i, j)| windows[i][[windows[i].nrows() - 1, j]]))
        }
    }

    impl OneStepModel for Echo {
        fn num_features(&self) -> usize {
            self.0
        }

        fn predict_step(&self, windows: &[&Array2<f64>]) -> Result<Array2<f64>> {
            self.generate_batch(windows, &Array2::zeros((windows.len(), self.0)))
        }
    }

    /// Next row is the sum of the window's rows, so every step depends on
    /// the whole window.
    struct RowSum;

    impl OneStepModel for RowSum {
        fn num_features(&self) -> usize {
            1
        }

        fn predict_step(&self, windows: &[&Array2<f64>]) -> Result<Array2<f64>> {
            Ok(Array2::from_shape_fn((windows.len(), 1), |(i, _)| windows[i].sum()))
        }
    }

    /// Records the windows it receives.
    struct Recorder(std::sync::Mutex<Vec<Array2<f64>>>, TargetSpec);

    impl DirectModel for Recorder {
        fn target_spec(&self) -> TargetSpec {
            self.1
        }

        fn predict_direct(&self, windows: &[&Array2<f64>]) -> Result<Vec<f64>> {
            self.0.lock().unwrap().extend(windows.iter().map(|w| (*w).clone()));
            Ok(vec![0.0; windows.len()])
        }
    }

    fn window() -> Array2<f64> {
        array![[1.0, 10.0], [2.0, 20.0], [3.0, 30.0], [4.0, 40.0], [5.0, 50.0]]
    }

    #[test]
    fn persistence_direct_returns_last_target_value() {
        let p = Persistence { feature: 1, horizon: 4, synthetic_len: 0 };
        assert_eq!(forecast_direct(&p, &window(), 4).unwrap(), 50.0);
        assert!(matches!(forecast_direct(&p, &window(), 3), Err(Error::Contract(_))));
    }

    #[test]
    fn iterative_with_echo_is_a_fixed_point() {
        for n in 1..6 {
            assert_eq!(forecast_iterative(&Echo(2), &window(), n, 0).unwrap(), 5.0);
        }
    }

    #[test]
    fn iterative_matches_hand_unrolled_sums() {
        // [1,2,4] → 7; [2,4,7] → 13; [4,7,13] → 24
        let w = array![[1.0], [2.0], [4.0]];
        assert_eq!(forecast_iterative(&RowSum, &w, 1, 0).unwrap(), 7.0);
        assert_eq!(forecast_iterative(&RowSum, &w, 3, 0).unwrap(), 24.0);
    }

    #[test]
    fn iterative_rejects_narrow_models() {
        assert!(matches!(forecast_iterative(&RowSum, &window(), 2, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn iterative_at_horizon_one_equals_one_step_direct() {
        let t = Transformer::new(2, 5, AttentionConfig::default(), TargetSpec::one_step(), 4).unwrap();
        let direct = predict_batch(&t, &[&window()]).unwrap()[[0, 1]];
        assert_eq!(forecast_iterative(&t, &window(), 1, 1).unwrap(), direct);
    }

    #[test]
    fn genf_with_no_synthetic_rows_is_direct() {
        let t = Transformer::new(2, 5, AttentionConfig::default(), TargetSpec::direct(6, 0), 9).unwrap();
        let a = forecast_direct(&t, &window(), 6).unwrap();
        let b = forecast_genf(&Echo(2), &t, &window(), 0, 6, 123).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn echo_generator_and_persistence_predictor_return_last_value() {
        let p = Persistence { feature: 0, horizon: 6, synthetic_len: 3 };
        assert_eq!(forecast_genf(&Echo(2), &p, &window(), 3, 6, 0).unwrap(), 5.0);
    }

    #[test]
    fn genf_feeds_real_then_synthetic_rows() {
        struct Count;
        impl StepGenerator for Count {
            fn num_features(&self) -> usize {
                1
            }
            fn generate_batch(&self, w: &[&Array2<f64>], _n: &Array2<f64>) -> Result<Array2<f64>> {
                Ok(Array2::from_shape_fn((w.len(), 1), |(i, _)| -w[i][[w[i].nrows() - 1, 0]] - 1.0))
            }
        }
        let rec = Recorder(Default::default(), TargetSpec { horizon: 4, target: Target::Feature(0), synthetic_len: 2 });
        let w = array![[1.0], [2.0], [3.0], [4.0], [5.0]];
        forecast_genf(&Count, &rec, &w, 2, 4, 0).unwrap();
        let seen = rec.0.lock().unwrap()[0].clone();
        assert_eq!(seen.column(0).to_vec(), vec![3.0, 4.0, 5.0, -6.0, 5.0]);
    }

    #[test]
    fn genf_rejects_long_synthetic_windows_and_mismatched_predictors() {
        let p = Persistence { feature: 0, horizon: 4, synthetic_len: 4 };
        assert!(matches!(forecast_genf(&Echo(2), &p, &window(), 4, 4, 0), Err(Error::Config(_))));
        let p = Persistence { feature: 0, horizon: 4, synthetic_len: 1 };
        assert!(matches!(forecast_genf(&Echo(2), &p, &window(), 2, 4, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn rewritten_windows_keep_length_and_targets() {
        let sample = Sample {
            unit_id: "a".into(),
            start: 3,
            window: window(),
            targets: [(4usize, vec![9.0, 90.0])].into_iter().collect(),
        };
        let set = WindowedDataset {
            samples: vec![sample],
            window_len: 5,
            horizons: vec![4],
            feature_names: vec!["x".into(), "y".into()],
            scaling: None,
        };
        let out = rewrite_windows(&Echo(2), &set, 2, 1).unwrap();
        let w = &out.samples[0].window;
        assert_eq!(w.dim(), (5, 2));
        assert_eq!(w.column(0).to_vec(), vec![3.0, 4.0, 5.0, 5.0, 5.0]);
        assert_eq!(out.samples[0].targets, set.samples[0].targets);
    }
}
