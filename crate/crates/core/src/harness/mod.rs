//! Config-driven experiment runs and their on-disk outputs.

mod bundle;
mod config;
mod report;

pub use bundle::{
    Bundle, GeneratorBundle, GeneratorSettings, PredictorBundle, PredictorSettings, BUNDLE_SCHEMA_VERSION, GENERATOR_KIND,
    PREDICTOR_KIND,
};
pub use config::{validate_config, DatasetSource, ExperimentConfig, OUTPUT_ROOT_ENV};
pub use report::{emit_report, load_summary, Provenance, ReportFormat, SummaryFile, LONG_FILE, REPLICATES_FILE, SUMMARY_FILE};

use crate::error::Result;
use crate::strategies::{run_comparison, ExperimentReport};

/// Process exit code when every cell failed.
pub const EXIT_ALL_FAILED: i32 = 3;
/// Process exit code when some, but not all, replicates failed.
pub const EXIT_PARTIAL: i32 = 4;

/// Loads the dataset, runs every cell for every seed and writes all report
/// formats into the resolved output directory (plus a copy of the config).
pub fn run_pipeline(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut config = config.clone();
    for w in config.normalize()? {
        log::warn!("{w}");
    }
    let dataset = config.dataset.load()?;
    config.experiment.validate(dataset.num_features())?;
    let hash = config.hash();
    let report = run_comparison(&dataset, &config.experiment, &hash)?;
    let dir = config.resolved_output_dir();
    emit_report(&report, &dir, &ReportFormat::ALL)?;
    let text = toml::to_string(&config).map_err(|e| crate::Error::Serde(e.to_string()))?;
    let path = dir.join("config.toml");
    std::fs::write(&path, text).map_err(|e| crate::Error::io(&path, e))?;
    log::info!("wrote {}", dir.display());
    Ok(report)
}

/// 0 when every replicate succeeded, [`EXIT_ALL_FAILED`] when every cell
/// has no successful replicate, [`EXIT_PARTIAL`] otherwise.
pub fn report_exit_code(report: &ExperimentReport) -> i32 {
    if report.failures() == 0 {
        0
    } else if report.cells.iter().all(|c| c.failures == c.replicates) {
        EXIT_ALL_FAILED
    } else {
        EXIT_PARTIAL
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::StrategyKind;

    #[test]
    fn persistence_pipeline_writes_every_format() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            r#"
output_dir = "{}"
[dataset]
kind = "synthetic"
lags = [[[0.7]]]
units = 10
length = 40
[experiment]
window_len = 6
horizons = [2]
synthetic_lens = [0]
strategies = ["persistence"]
seeds = [0, 1]
"#,
            dir.path().display()
        );
        let config = ExperimentConfig::from_toml_str(&text).unwrap();
        let report = run_pipeline(&config).unwrap();
        assert_eq!(report.records.len(), 2);
        assert_eq!(report_exit_code(&report), 0);
        assert!(report.cell(StrategyKind::Persistence, 2, 0).unwrap().mean(crate::metrics::Metric::Mse).is_some());
        for f in [REPLICATES_FILE, SUMMARY_FILE, LONG_FILE, "config.toml"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let again = ExperimentConfig::from_toml_str(&std::fs::read_to_string(dir.path().join("config.toml")).unwrap()).unwrap();
        assert_eq!(again.hash(), config.hash());
    }
}
