use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use genf::cwgan::{generate_recursive_batch, train_cwgan, CwganDims, CwganHyper};
use genf::data::{
    impute_last_observation, load_csv_dataset, load_dataset, make_windows, save_dataset, synth_ar_process, ArSpec, CsvSchema,
    FitOn, ScalingParams, TimeSeriesDataset, WindowedDataset,
};
use genf::harness::{
    report_exit_code, run_pipeline, validate_config, GeneratorBundle, GeneratorSettings, PredictorBundle,
    PredictorSettings, GENERATOR_KIND, PREDICTOR_KIND, SUMMARY_FILE,
};
use genf::itc::{itc_split, ItcConfig};
use genf::metrics::{evaluate, ScaleSpace};
use genf::predictor::{train_predictor, AttentionConfig, PredictorHyper, TargetSpec};
use genf::strategies::{forecast_direct_batch, forecast_genf_batch, rewrite_windows, sample_seed};
use genf::theory::{
    corollary_check, empirical_bias_variance, BiasVarianceConfig, HorizonTrainer, LinearTrainer, TheoryParams,
    TransformerTrainer, DEFAULT_ANY_L_TOLERANCE,
};
use genf::{Error, Result};

#[derive(Parser)]
#[command(name = "genf", version, about = "Generative forecasting experiments")]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn", env = "GENF_LOG")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a CSV (or simulate an AR process) and store it as a dataset file.
    PrepareData {
        #[arg(long, conflicts_with = "synthetic")]
        csv: Option<PathBuf>,
        /// `preset:<name>` or a TOML schema file.
        #[arg(long, default_value = "preset:uci-air-quality")]
        schema: String,
        #[arg(long)]
        no_impute: bool,
        /// Process spec such as `ar1:phi=0.9,sigma=1`.
        #[arg(long, required_unless_present = "csv")]
        synthetic: Option<String>,
        #[arg(long, default_value_t = 20)]
        units: usize,
        #[arg(long, default_value_t = 400)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score units by mutual information and split them for ITC.
    MiScore {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 4)]
        gamma: usize,
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the CWGAN-TS generator on a stored dataset.
    TrainGenerator {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 24)]
        window: usize,
        #[arg(long, default_value_t = 1000)]
        epochs: usize,
        #[arg(long = "lambda", default_value_t = 5.0)]
        lambda_gp: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value_t = 5)]
        critic_steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extend the last window of every unit by `steps` generated rows.
    Generate {
        #[arg(long)]
        gen_bundle: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a direct or GenF predictor for one horizon.
    TrainPredictor {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long, value_enum, default_value = "df")]
        strategy: PredictorStrategy,
        #[arg(long)]
        gen_bundle: Option<PathBuf>,
        #[arg(long = "L", default_value_t = 0)]
        synthetic_len: usize,
        /// Window length; taken from the generator bundle when one is given.
        #[arg(long, default_value_t = 24)]
        window: usize,
        #[arg(long, default_value_t = 0)]
        target: usize,
        #[arg(long, default_value_t = 1000)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a trained predictor on a stored dataset.
    Evaluate {
        #[arg(long)]
        pred_bundle: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Required when the predictor was trained on synthetic rows.
        #[arg(long)]
        gen_bundle: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every strategy, horizon and seed of a TOML experiment.
    RunExperiment {
        #[arg(long)]
        config: PathBuf,
        /// JSON summary path; the CSVs are written next to it. Defaults to
        /// the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Only parse and check the config.
        #[arg(long)]
        check: bool,
    },
    /// Evaluate the direct, iterative and GenF error bounds.
    TheoryBounds {
        #[arg(long)]
        params: PathBuf,
        /// Evaluate the GenF bound for every L in 1..N.
        #[arg(long = "scan-L")]
        scan_l: bool,
        #[arg(long, default_value_t = DEFAULT_ANY_L_TOLERANCE)]
        tolerance: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate noise, bias and variance of direct forecasters on a simulated process.
    BiasVariance {
        #[arg(long, default_value = "ar1:phi=0.9")]
        process: String,
        #[arg(long = "R", default_value_t = 10)]
        ensemble: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,4,8")]
        horizons: Vec<usize>,
        #[arg(long, value_enum, default_value = "linear")]
        trainer: TrainerKind,
        #[arg(long, default_value_t = 10)]
        window: usize,
        /// Predictor epochs for the transformer trainer.
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 20000)]
        test_points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PredictorStrategy {
    Df,
    Genf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TrainerKind {
    Linear,
    Transformer,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn flush(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn scaled_windows(data: &TimeSeriesDataset, scaling: &ScalingParams, window: usize, horizons: &[usize]) -> Result<WindowedDataset> {
    let (set, skipped) = make_windows(&scaling.apply(data)?, window, horizons)?;
    if !skipped.is_empty() {
        log::warn!("{} units too short for the window were skipped", skipped.len());
    }
    if set.is_empty() {
        return Err(Error::data("no windows could be formed"));
    }
    Ok(set)
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::PrepareData { csv, schema, no_impute, synthetic, units, length, seed, out } => {
            let ds = match (csv, synthetic) {
                (Some(path), _) => {
                    let ds = load_csv_dataset(&path, &CsvSchema::resolve(&schema)?)?;
                    if no_impute {
                        ds
                    } else {
                        impute_last_observation(&ds)?
                    }
                }
                (None, Some(spec)) => synth_ar_process(&ArSpec::parse(&spec)?, units, length, seed)?,
                (None, None) => return Err(Error::config("give --csv or --synthetic")),
            };
            save_dataset(&out, &ds)?;
            println!("{} units, {} features -> {}", ds.num_units(), ds.num_features(), out.display());
        }
        Command::MiScore { dataset, k, gamma, fraction, seed, out } => {
            let ds = load_dataset(&dataset)?;
            let config = ItcConfig { k_neighbors: k, gamma_groups: gamma, generator_fraction: fraction, seed, ..Default::default() };
            let split = itc_split(&ds, &config)?;
            let mut w = csv_writer(&out)?;
            w.write_record(["unit_id", "score", "group", "assignment"])?;
            for a in &split.assignments {
                let assignment = serde_json::to_value(a.assignment)?;
                w.write_record([
                    a.unit_id.clone(),
                    a.score.to_string(),
                    a.group.to_string(),
                    assignment.as_str().unwrap_or_default().to_string(),
                ])?;
            }
            flush(w, &out)?;
        }
        Command::TrainGenerator { data, window, epochs, lambda_gp, eta, critic_steps, seed, out } => {
            let ds = load_dataset(&data)?;
            let (scaling, _) = ScalingParams::fit(&ds, &FitOn::All)?;
            let set = scaled_windows(&ds, &scaling, window, &[1])?;
            let dims = CwganDims::default();
            let hyper = CwganHyper { epochs, lambda_gp, eta_sup: eta, critic_steps, seed, ..Default::default() };
            let (generator, _, trace) = train_cwgan(&set, &dims, &hyper)?;
            if let Some(last) = trace.last() {
                log::info!("final epoch {}: loss {} aux {}", last.epoch, last.loss, last.aux);
            }
            GeneratorBundle::new(GENERATOR_KIND, scaling, window, GeneratorSettings { dims, hyper }, seed, generator).save(&out)?;
        }
        Command::Generate { gen_bundle, data, steps, seed, out } => {
            let bundle = GeneratorBundle::load(&gen_bundle, GENERATOR_KIND)?;
            let ds = bundle.scaling.apply(&load_dataset(&data)?)?;
            let m = bundle.window_len;
            let units: Vec<_> = ds.units.iter().filter(|u| u.len() >= m).collect();
            if units.is_empty() {
                return Err(Error::data(format!("no unit has {m} rows")));
            }
            let windows: Vec<_> =
                units.iter().map(|u| u.values.slice(ndarray::s![u.len() - m.., ..]).to_owned()).collect();
            let refs: Vec<_> = windows.iter().collect();
            let seeds: Vec<u64> = units.iter().map(|u| genf::seed::derive_seed(seed, &["generate", &u.id])).collect();
            let blocks = generate_recursive_batch(&bundle.model, &refs, steps, &seeds)?;
            let mut w = csv_writer(&out)?;
            let mut header = vec!["unit_id".to_string(), "step".to_string()];
            header.extend(ds.feature_names.iter().cloned());
            w.write_record(&header)?;
            for (u, block) in units.iter().zip(&blocks) {
                for (i, row) in block.rows().into_iter().enumerate() {
                    let mut rec = vec![u.id.clone(), (i + 1).to_string()];
                    rec.extend(row.iter().enumerate().map(|(f, &v)| bundle.scaling.invert_value(f, v).to_string()));
                    w.write_record(&rec)?;
                }
            }
            flush(w, &out)?;
        }
        Command::TrainPredictor { data, horizon, strategy, gen_bundle, synthetic_len, window, target, epochs, seed, out } => {
            let ds = load_dataset(&data)?;
            let generator = gen_bundle.as_ref().map(|p| GeneratorBundle::load(p, GENERATOR_KIND)).transpose()?;
            let l = match strategy {
                PredictorStrategy::Df => 0,
                PredictorStrategy::Genf => synthetic_len,
            };
            if l > 0 && generator.is_none() {
                return Err(Error::config("--strategy genf with L > 0 needs --gen-bundle"));
            }
            let (scaling, window) = match &generator {
                Some(g) => (g.scaling.clone(), g.window_len),
                None => (ScalingParams::fit(&ds, &FitOn::All)?.0, window),
            };
            let mut set = scaled_windows(&ds, &scaling, window, &[horizon])?;
            if let (Some(g), true) = (&generator, l > 0) {
                set = rewrite_windows(&g.model, &set, l, seed)?;
            }
            let spec = TargetSpec { synthetic_len: l, ..TargetSpec::direct(horizon, target) };
            let attention = AttentionConfig::default();
            let hyper = PredictorHyper { epochs, seed, ..Default::default() };
            let (model, _) = train_predictor(&set, spec, &attention, &hyper, None)?;
            PredictorBundle::new(PREDICTOR_KIND, scaling, window, PredictorSettings { attention, hyper }, seed, model).save(&out)?;
        }
        Command::Evaluate { pred_bundle, data, gen_bundle, seed, out } => {
            let bundle = PredictorBundle::load(&pred_bundle, PREDICTOR_KIND)?;
            let spec = bundle.model.spec;
            let target = match spec.target {
                genf::predictor::Target::Feature(f) => f,
                _ => return Err(Error::config("evaluate needs a single-target predictor")),
            };
            let set = scaled_windows(&load_dataset(&data)?, &bundle.scaling, bundle.window_len, &[spec.horizon])?;
            let windows = set.windows();
            let pred = if spec.synthetic_len > 0 {
                let g = GeneratorBundle::load(
                    gen_bundle.as_ref().ok_or_else(|| Error::config("this predictor needs --gen-bundle"))?,
                    GENERATOR_KIND,
                )?;
                let seeds: Vec<u64> = set.samples.iter().map(|s| sample_seed(seed, s)).collect();
                forecast_genf_batch(&g.model, &bundle.model, &windows, spec.synthetic_len, spec.horizon, &seeds)?
            } else {
                forecast_direct_batch(&bundle.model, &windows, spec.horizon)?
            };
            let truth = set.targets(spec.horizon, target)?;
            let inv = |v: &[f64]| -> Vec<f64> { v.iter().map(|&x| bundle.scaling.invert_value(target, x)).collect() };
            let records = evaluate(&inv(&pred), &inv(&truth), ScaleSpace::Original)?;
            let mut w = csv_writer(&out)?;
            w.write_record(["metric", "value", "n"])?;
            for r in &records {
                w.write_record([r.metric.name().to_string(), r.value.to_string(), r.n.to_string()])?;
                println!("{} {}", r.metric.name(), r.value);
            }
            flush(w, &out)?;
        }
        Command::RunExperiment { config, out, check } => {
            let mut config = validate_config(&config)?;
            if check {
                println!("config ok, hash {}", config.hash());
                return Ok(0);
            }
            let json_name = out.as_ref().and_then(|p| p.file_name().map(|n| n.to_owned()));
            if let Some(path) = &out {
                let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
                config.output_dir = Some(dir.to_path_buf());
            }
            let dir = config.resolved_output_dir();
            let report = run_pipeline(&config)?;
            if let Some(name) = json_name.filter(|n| n != SUMMARY_FILE) {
                let from = dir.join(SUMMARY_FILE);
                let to = dir.join(name);
                std::fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
            }
            for cell in &report.cells {
                let mse = cell.mean(genf::metrics::Metric::Mse).map(|v| format!("{v:.6}")).unwrap_or("-".into());
                println!(
                    "{:<12} N={:<3} L={:<3} mse={mse} ({}/{} ok)",
                    cell.strategy.name(),
                    cell.horizon,
                    cell.synthetic_len,
                    cell.replicates - cell.failures,
                    cell.replicates
                );
            }
            println!("reports in {}", dir.display());
            return Ok(report_exit_code(&report));
        }
        Command::TheoryBounds { params, scan_l, tolerance, out } => {
            let text = std::fs::read_to_string(&params).map_err(|e| Error::io(&params, e))?;
            let params: TheoryParams = toml::from_str(&text)?;
            let report = corollary_check(&params, tolerance)?;
            let mut w = csv_writer(&out)?;
            w.write_record(["bound", "L", "value"])?;
            w.write_record(["direct".to_string(), String::new(), report.bounds.u_dir.to_string()])?;
            w.write_record(["iterative".to_string(), String::new(), report.bounds.u_iter.to_string()])?;
            let rows: Vec<(usize, f64)> = if scan_l {
                report.scan.clone()
            } else {
                match (params.synthetic_len, report.bounds.u_genf) {
                    (Some(l), Some(u)) => vec![(l, u)],
                    _ => Vec::new(),
                }
            };
            for (l, u) in rows {
                w.write_record(["genf".to_string(), l.to_string(), u.to_string()])?;
            }
            flush(w, &out)?;
            println!(
                "condition_holds={} threshold={} best_L={} any_L={}{}",
                report.condition_holds,
                report.threshold,
                report.best_l.map(|l| l.to_string()).unwrap_or("-".into()),
                report.any_l_regime,
                report.reason.map(|r| format!(" ({r})")).unwrap_or_default()
            );
        }
        Command::BiasVariance { process, ensemble, horizons, trainer, window, epochs, test_points, seed, out } => {
            let spec = ArSpec::parse(&process)?;
            let config = BiasVarianceConfig { window_len: window, horizons, ensemble_size: ensemble, test_points, seed, ..Default::default() };
            let linear = LinearTrainer::default();
            let transformer =
                TransformerTrainer { config: AttentionConfig::default(), hyper: PredictorHyper { epochs, ..Default::default() } };
            let trainer: &dyn HorizonTrainer = match trainer {
                TrainerKind::Linear => &linear,
                TrainerKind::Transformer => &transformer,
            };
            let report = empirical_bias_variance(&spec, &config, trainer)?;
            let mut w = csv_writer(&out)?;
            w.write_record(["horizon", "noise", "bias", "variance", "sum", "mse", "mse_se", "replicates", "dropped"])?;
            for h in &report.horizons {
                w.write_record([
                    h.horizon.to_string(),
                    h.noise.to_string(),
                    h.bias.to_string(),
                    h.variance.to_string(),
                    h.sum.to_string(),
                    h.mse.to_string(),
                    h.mse_se.to_string(),
                    h.replicates.to_string(),
                    h.dropped.to_string(),
                ])?;
            }
            flush(w, &out)?;
            if report.reduced() {
                log::warn!("some replicates failed; variance rests on fewer models");
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
