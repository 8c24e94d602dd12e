use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    forecast_direct_batch, forecast_genf_batch, forecast_iterative_batch, rewrite_windows, sample_seed,
    Persistence,
};
use crate::cwgan::{train_cwgan, CwganDims, CwganHyper, Generator, StepGenerator};
use crate::data::{make_windows, split_chronological, split_units, ScalingParams, SplitRatios, TimeSeriesDataset, WindowedDataset};
use crate::error::{Error, Result};
use crate::itc::{itc_split, ItcConfig};
use crate::metrics::{evaluate, Metric, MetricRecord, ScaleSpace};
use crate::predictor::{
    train_lstm_baseline, train_predictor, AttentionConfig, LstmConfig, PredictorHyper, TargetSpec,
};
use crate::seed::derive_seed;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Direct,
    Iterative,
    Genf,
    /// Direct forecasting with the stacked-LSTM baseline.
    Lstm,
    /// Last observed value.
    Persistence,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Direct => "direct",
            StrategyKind::Iterative => "iterative",
            StrategyKind::Genf => "genf",
            StrategyKind::Lstm => "lstm",
            StrategyKind::Persistence => "persistence",
        }
    }
}

/// The recursion model used by iterative forecasting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterativeModel {
    /// Transformer with a K-wide one-step head.
    Transformer,
    /// The CWGAN-TS generator, run for N steps.
    Generator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    UnitRandom,
    Chronological,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonConfig {
    pub window_len: usize,
    pub horizons: Vec<usize>,
    pub synthetic_lens: Vec<usize>,
    pub strategies: Vec<StrategyKind>,
    /// Index of the forecast feature.
    pub target: usize,
    pub seeds: Vec<u64>,
    pub split: SplitMode,
    pub ratios: SplitRatios,
    /// Keep the epoch with the lowest validation MSE.
    pub select_on_validation: bool,
    pub iterative_model: IterativeModel,
    pub itc: ItcConfig,
    pub cwgan_dims: CwganDims,
    pub cwgan: CwganHyper,
    pub attention: AttentionConfig,
    pub predictor: PredictorHyper,
    pub lstm: LstmConfig,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            window_len: 24,
            horizons: vec![4],
            synthetic_lens: vec![2],
            strategies: vec![StrategyKind::Direct, StrategyKind::Iterative, StrategyKind::Genf],
            target: 0,
            seeds: vec![0],
            split: SplitMode::UnitRandom,
            ratios: SplitRatios::default(),
            select_on_validation: true,
            iterative_model: IterativeModel::Transformer,
            itc: ItcConfig::default(),
            cwgan_dims: CwganDims::default(),
            cwgan: CwganHyper::default(),
            attention: AttentionConfig::default(),
            predictor: PredictorHyper::default(),
            lstm: LstmConfig::default(),
        }
    }
}

impl ComparisonConfig {
    pub fn validate(&self, features: usize) -> Result<()> {
        self.validate_shape()?;
        if self.target >= features {
            return Err(Error::config(format!("target feature {} out of range for {features} features", self.target)));
        }
        Ok(())
    }

    /// Every check that does not need the dataset.
    pub fn validate_shape(&self) -> Result<()> {
        if self.window_len == 0 {
            return Err(Error::config("window_len must be at least 1"));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::config("horizons must be a nonempty list of positive integers"));
        }
        if self.seeds.is_empty() || self.strategies.is_empty() {
            return Err(Error::config("at least one seed and one strategy are required"));
        }
        if self.strategies.contains(&StrategyKind::Genf) {
            if self.synthetic_lens.is_empty() {
                return Err(Error::config("genf needs at least one synthetic length"));
            }
            let max_n = *self.horizons.iter().max().expect("nonempty");
            for &l in &self.synthetic_lens {
                if l >= max_n {
                    return Err(Error::config(format!("synthetic length {l} must be below every horizon it pairs with")));
                }
            }
        }
        self.ratios.validate()?;
        self.cwgan.validate()?;
        self.cwgan_dims.validate()?;
        self.attention.validate()?;
        self.predictor.validate()
    }

    /// `(strategy, N, L)` cells in report order. Iterative cells carry
    /// `L = N − 1`; GenF pairs each horizon with every `L < N`.
    pub fn cells(&self) -> Vec<(StrategyKind, usize, usize)> {
        let mut strategies = self.strategies.clone();
        strategies.sort();
        strategies.dedup();
        let mut horizons = self.horizons.clone();
        horizons.sort_unstable();
        horizons.dedup();
        let mut lens = self.synthetic_lens.clone();
        lens.sort_unstable();
        lens.dedup();
        let mut out = Vec::new();
        for &s in &strategies {
            for &n in &horizons {
                match s {
                    StrategyKind::Genf => out.extend(lens.iter().filter(|&&l| l < n).map(|&l| (s, n, l))),
                    StrategyKind::Iterative => out.push((s, n, n - 1)),
                    _ => out.push((s, n, 0)),
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub strategy: StrategyKind,
    pub horizon: usize,
    pub synthetic_len: usize,
    pub seed: u64,
    /// `None` on success.
    pub error: Option<String>,
    pub metrics: Vec<MetricRecord>,
}

impl ReplicateRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn metric(&self, m: Metric) -> Option<f64> {
        self.metrics.iter().find(|r| r.metric == m).map(|r| r.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    pub mean: f64,
    /// Sample standard deviation; absent with fewer than two replicates.
    pub std: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub strategy: StrategyKind,
    pub horizon: usize,
    pub synthetic_len: usize,
    pub replicates: usize,
    pub failures: usize,
    pub metrics: Vec<MetricSummary>,
}

impl CellSummary {
    pub fn mean(&self, m: Metric) -> Option<f64> {
        self.metrics.iter().find(|s| s.metric == m).map(|s| s.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub target_feature: String,
    pub records: Vec<ReplicateRecord>,
    pub cells: Vec<CellSummary>,
}

impl ExperimentReport {
    pub fn from_records(config_hash: String, seeds: Vec<u64>, target_feature: String, records: Vec<ReplicateRecord>) -> Self {
        let mut groups: BTreeMap<(StrategyKind, usize, usize), Vec<&ReplicateRecord>> = BTreeMap::new();
        for r in &records {
            groups.entry((r.strategy, r.horizon, r.synthetic_len)).or_default().push(r);
        }
        let cells = groups
            .into_iter()
            .map(|((strategy, horizon, synthetic_len), rs)| {
                let ok: Vec<&&ReplicateRecord> = rs.iter().filter(|r| r.ok()).collect();
                let metrics = Metric::ALL
                    .iter()
                    .filter_map(|&m| {
                        let vals: Vec<f64> = ok.iter().filter_map(|r| r.metric(m)).collect();
                        if vals.is_empty() {
                            return None;
                        }
                        let n = vals.len();
                        let mean = vals.iter().sum::<f64>() / n as f64;
                        let std = (n >= 2).then(|| {
                            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
                        });
                        Some(MetricSummary { metric: m, mean, std, n })
                    })
                    .collect();
                CellSummary { strategy, horizon, synthetic_len, replicates: rs.len(), failures: rs.len() - ok.len(), metrics }
            })
            .collect();
        Self { schema_version: REPORT_SCHEMA_VERSION, config_hash, seeds, target_feature, records, cells }
    }

    pub fn cell(&self, strategy: StrategyKind, horizon: usize, synthetic_len: usize) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.strategy == strategy && c.horizon == horizon && c.synthetic_len == synthetic_len)
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.ok()).count()
    }
}

struct SeedData {
    train: WindowedDataset,
    val: Option<WindowedDataset>,
    test: WindowedDataset,
    train_units: TimeSeriesDataset,
    scaling: ScalingParams,
}

fn prepare_seed(dataset: &TimeSeriesDataset, config: &ComparisonConfig, seed: u64) -> Result<SeedData> {
    let mut horizons = config.horizons.clone();
    horizons.push(1);
    let need = config.window_len + horizons.iter().max().copied().unwrap_or(1);
    let splits = match config.split {
        SplitMode::UnitRandom => split_units(dataset, config.ratios, derive_seed(seed, &["split"]))?,
        SplitMode::Chronological => split_chronological(dataset, config.ratios, need)?.0,
    };
    let (scaling, _) = ScalingParams::fit(&splits.train, &crate::data::FitOn::All)?;
    let train_units = scaling.apply(&splits.train)?;
    let window = |d: &TimeSeriesDataset| -> Result<WindowedDataset> {
        Ok(make_windows(&scaling.apply(d)?, config.window_len, &horizons)?.0)
    };
    let train = window(&splits.train)?;
    let test = window(&splits.test)?;
    let val = window(&splits.val)?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::data("no training or test windows after splitting"));
    }
    let val = (config.select_on_validation && !val.is_empty()).then_some(val);
    Ok(SeedData { train, val, test, train_units, scaling })
}

fn score(data: &SeedData, target: usize, horizon: usize, pred: &[f64]) -> Result<Vec<MetricRecord>> {
    let truth = data.test.targets(horizon, target)?;
    let p: Vec<f64> = pred.iter().map(|&v| data.scaling.invert_value(target, v)).collect();
    let t: Vec<f64> = truth.iter().map(|&v| data.scaling.invert_value(target, v)).collect();
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training { message: "non-finite test predictions".into(), trace: Default::default() });
    }
    evaluate(&p, &t, ScaleSpace::Original)
}

fn with_seed(hyper: &PredictorHyper, seed: u64, parts: &[&str]) -> PredictorHyper {
    PredictorHyper { seed: derive_seed(seed, parts), ..hyper.clone() }
}

/// Runs every cell for one seed; cell failures are recorded, not raised.
fn run_seed(
    dataset: &TimeSeriesDataset,
    config: &ComparisonConfig,
    seed: u64,
    cells: &[(StrategyKind, usize, usize)],
) -> Vec<ReplicateRecord> {
    let record = |(strategy, horizon, synthetic_len): (StrategyKind, usize, usize), res: Result<Vec<MetricRecord>>| {
        let (metrics, error) = match res {
            Ok(m) => (m, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        ReplicateRecord { strategy, horizon, synthetic_len, seed, error, metrics }
    };
    let data = match prepare_seed(dataset, config, seed) {
        Ok(d) => d,
        Err(e) => {
            let msg = e.to_string();
            return cells.iter().map(|&c| record(c, Err(Error::data(msg.clone())))).collect();
        }
    };
    let f = config.target;
    let test_windows = data.test.windows();
    let val = data.val.as_ref();

    let needs_generator = cells.iter().any(|c| c.0 == StrategyKind::Genf)
        || (config.iterative_model == IterativeModel::Generator && cells.iter().any(|c| c.0 == StrategyKind::Iterative));
    let genf_setup: Option<std::result::Result<(Generator, WindowedDataset), String>> = needs_generator.then(|| {
        let run = || -> Result<(Generator, WindowedDataset)> {
            let itc = ItcConfig { seed: derive_seed(seed, &["itc"]), ..config.itc };
            let split = itc_split(&data.train_units, &itc)?;
            let gen_set = make_windows(&split.generator_set, config.window_len, &[1])?.0;
            let hyper = CwganHyper { seed: derive_seed(seed, &["cwgan"]), ..config.cwgan.clone() };
            let (generator, _, _) = train_cwgan(&gen_set, &config.cwgan_dims, &hyper)?;
            Ok((generator, data.train.filter_units(&split.predictor_set.unit_ids())))
        };
        run().map_err(|e| e.to_string())
    });
    let one_step = cells.iter().any(|c| c.0 == StrategyKind::Iterative).then(|| {
        train_predictor(&data.train, TargetSpec::one_step(), &config.attention, &with_seed(&config.predictor, seed, &["iterative"]), val)
            .map(|(m, _)| m)
            .map_err(|e| e.to_string())
    });
    // rewritten predictor-set, validation and test windows per synthetic length
    let mut rewritten: BTreeMap<usize, std::result::Result<(WindowedDataset, Option<WindowedDataset>), String>> = BTreeMap::new();

    let mut out = Vec::with_capacity(cells.len());
    for &cell in cells {
        let (strategy, n, l) = cell;
        let tag = [strategy.name().to_string(), n.to_string(), l.to_string()];
        let tag: Vec<&str> = tag.iter().map(String::as_str).collect();
        let res: Result<Vec<MetricRecord>> = (|| match strategy {
            StrategyKind::Direct => {
                let hyper = with_seed(&config.predictor, seed, &tag);
                let (m, _) = train_predictor(&data.train, TargetSpec::direct(n, f), &config.attention, &hyper, val)?;
                score(&data, f, n, &forecast_direct_batch(&m, &test_windows, n)?)
            }
            StrategyKind::Lstm => {
                let hyper = with_seed(&config.predictor, seed, &tag);
                let (m, _) = train_lstm_baseline(&data.train, TargetSpec::direct(n, f), &config.lstm, &hyper, val)?;
                score(&data, f, n, &forecast_direct_batch(&m, &test_windows, n)?)
            }
            StrategyKind::Persistence => {
                let p = Persistence { feature: f, horizon: n, synthetic_len: 0 };
                score(&data, f, n, &forecast_direct_batch(&p, &test_windows, n)?)
            }
            StrategyKind::Iterative => match config.iterative_model {
                IterativeModel::Transformer => {
                    let m = one_step.as_ref().expect("trained above").as_ref().map_err(|e| Error::Training {
                        message: e.clone(),
                        trace: Default::default(),
                    })?;
                    score(&data, f, n, &forecast_iterative_batch(m, &test_windows, n, f)?)
                }
                IterativeModel::Generator => {
                    let (g, _) = setup_or_err(&genf_setup)?;
                    let seeds: Vec<u64> =
                        data.test.samples.iter().map(|s| sample_seed(derive_seed(seed, &["iterative"]), s)).collect();
                    let blocks = crate::cwgan::generate_recursive_batch(g, &test_windows, n, &seeds)?;
                    let pred: Vec<f64> = blocks.iter().map(|b| b[[n - 1, f]]).collect();
                    score(&data, f, n, &pred)
                }
            },
            StrategyKind::Genf => {
                let (g, pred_set) = setup_or_err(&genf_setup)?;
                let noise_seed = derive_seed(seed, &["genf", &l.to_string()]);
                let entry = rewritten.entry(l).or_insert_with(|| {
                    let train = rewrite_windows(g, pred_set, l, noise_seed).map_err(|e| e.to_string())?;
                    let val = match val {
                        Some(v) => Some(rewrite_windows(g, v, l, noise_seed).map_err(|e| e.to_string())?),
                        None => None,
                    };
                    Ok((train, val))
                });
                let (train, val) = entry.as_ref().map_err(|e| Error::Training { message: e.clone(), trace: Default::default() })?;
                if train.is_empty() {
                    return Err(Error::data("ITC left the predictor set empty"));
                }
                let hyper = with_seed(&config.predictor, seed, &tag);
                let spec = TargetSpec { synthetic_len: l, ..TargetSpec::direct(n, f) };
                let (m, _) = train_predictor(train, spec, &config.attention, &hyper, val.as_ref())?;
                let seeds: Vec<u64> = data.test.samples.iter().map(|s| sample_seed(noise_seed, s)).collect();
                score(&data, f, n, &forecast_genf_batch(g, &m, &test_windows, l, n, &seeds)?)
            }
        })();
        if let Err(e) = &res {
            log::warn!("seed {seed} {} N={n} L={l} failed: {e}", strategy.name());
        }
        out.push(record(cell, res));
    }
    out
}

fn setup_or_err<'a, G: StepGenerator>(
    setup: &'a Option<std::result::Result<(G, WindowedDataset), String>>,
) -> Result<(&'a G, &'a WindowedDataset)> {
    match setup {
        Some(Ok((g, set))) => Ok((g, set)),
        Some(Err(e)) => Err(Error::Training { message: format!("generator stage failed: {e}"), trace: Default::default() }),
        None => Err(Error::contract("generator stage was not run")),
    }
}

/// Runs every `(strategy, N, L)` cell for every seed on `dataset` (raw
/// units; scaling is fitted per seed on the training split).
pub fn run_comparison(dataset: &TimeSeriesDataset, config: &ComparisonConfig, config_hash: &str) -> Result<ExperimentReport> {
    config.validate(dataset.num_features())?;
    let cells = config.cells();
    let mut seeds = Vec::with_capacity(config.seeds.len());
    for &s in &config.seeds {
        if !seeds.contains(&s) {
            seeds.push(s);
        }
    }
    // seeds are independent; results are concatenated in seed-list order
    let records: Vec<ReplicateRecord> = seeds
        .par_iter()
        .map(|&seed| {
            log::info!("seed {seed}: {} cells", cells.len());
            run_seed(dataset, config, seed, &cells)
        })
        .collect::<Vec<_>>()
        .concat();
    let target = dataset.feature_names.get(config.target).cloned().unwrap_or_default();
    Ok(ExperimentReport::from_records(config_hash.to_string(), seeds, target, records))
}
