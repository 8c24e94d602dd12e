use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::strategies::{ExperimentReport, REPORT_SCHEMA_VERSION};

pub const REPLICATES_FILE: &str = "report.csv";
pub const SUMMARY_FILE: &str = "report.json";
pub const LONG_FILE: &str = "long.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    /// One row per cell replicate.
    ReplicateCsv,
    /// Aggregated means and standard deviations with provenance.
    Json,
    /// `(strategy, N, L, seed, metric, value)` rows for plotting.
    LongCsv,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::ReplicateCsv, ReportFormat::Json, ReportFormat::LongCsv];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub config_hash: String,
    pub crate_name: String,
    pub crate_version: String,
    pub seeds: Vec<u64>,
    /// Seconds since the Unix epoch when the files were written.
    pub written_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub provenance: Provenance,
    pub report: ExperimentReport,
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_replicates(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["schema_version", "config_hash", "strategy", "horizon", "synthetic_len", "seed", "status", "error"];
    header.extend(Metric::ALL.iter().map(|m| m.name()));
    w.write_record(&header)?;
    for r in &report.records {
        let mut row = vec![
            report.schema_version.to_string(),
            report.config_hash.clone(),
            r.strategy.name().to_string(),
            r.horizon.to_string(),
            r.synthetic_len.to_string(),
            r.seed.to_string(),
            if r.ok() { "ok" } else { "failed" }.to_string(),
            r.error.clone().unwrap_or_default(),
        ];
        row.extend(Metric::ALL.iter().map(|&m| fmt(r.metric(m))));
        w.write_record(&row)?;
    }
    finish(w, path)
}

fn write_long(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["schema_version", "config_hash", "strategy", "N", "L", "seed", "metric", "value"])?;
    for r in report.records.iter().filter(|r| r.ok()) {
        for m in &r.metrics {
            w.write_record([
                report.schema_version.to_string(),
                report.config_hash.clone(),
                r.strategy.name().to_string(),
                r.horizon.to_string(),
                r.synthetic_len.to_string(),
                r.seed.to_string(),
                m.metric.name().to_string(),
                m.value.to_string(),
            ])?;
        }
    }
    finish(w, path)
}

/// Writes the requested files into `dir` and returns their paths. CSV
/// output is a pure function of the report; only the JSON carries a timestamp.
pub fn emit_report(report: &ExperimentReport, dir: impl AsRef<Path>, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for &f in formats {
        let path = dir.join(match f {
            ReportFormat::ReplicateCsv => REPLICATES_FILE,
            ReportFormat::Json => SUMMARY_FILE,
            ReportFormat::LongCsv => LONG_FILE,
        });
        match f {
            ReportFormat::ReplicateCsv => write_replicates(report, &path)?,
            ReportFormat::LongCsv => write_long(report, &path)?,
            ReportFormat::Json => {
                let summary = SummaryFile {
                    provenance: Provenance {
                        schema_version: REPORT_SCHEMA_VERSION,
                        config_hash: report.config_hash.clone(),
                        crate_name: env!("CARGO_PKG_NAME").to_string(),
                        crate_version: env!("CARGO_PKG_VERSION").to_string(),
                        seeds: report.seeds.clone(),
                        written_at: std::time::SystemTime::now()
                            .duration_since(std::time::UNIX_EPOCH)
                            .map(|d| d.as_secs())
                            .unwrap_or(0),
                    },
                    report: report.clone(),
                };
                let text = serde_json::to_string_pretty(&summary)?;
                std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            }
        }
        written.push(path);
    }
    Ok(written)
}

pub fn load_summary(path: impl AsRef<Path>) -> Result<SummaryFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let summary: SummaryFile = serde_json::from_str(&text)?;
    if summary.provenance.schema_version != REPORT_SCHEMA_VERSION {
        return Err(Error::data(format!(
            "{} has report schema version {}, expected {REPORT_SCHEMA_VERSION}",
            path.display(),
            summary.provenance.schema_version
        )));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{MetricRecord, ScaleSpace};
    use crate::strategies::{ReplicateRecord, StrategyKind};

    fn report() -> ExperimentReport {
        let mut records = Vec::new();
        for (strategy, l) in [(StrategyKind::Direct, 0), (StrategyKind::Genf, 2)] {
            for seed in 0..3u64 {
                let v = 1.0 + seed as f64 + l as f64;
                records.push(ReplicateRecord {
                    strategy,
                    horizon: 4,
                    synthetic_len: l,
                    seed,
                    error: None,
                    metrics: Metric::ALL
                        .iter()
                        .map(|&metric| MetricRecord { metric, value: v, n: 10, scale_space: ScaleSpace::Original })
                        .collect(),
                });
            }
        }
        ExperimentReport::from_records("abc123".into(), vec![0, 1, 2], "x".into(), records)
    }

    #[test]
    fn two_cells_three_seeds_give_six_rows() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report(), dir.path(), &ReportFormat::ALL).unwrap();
        let text = std::fs::read_to_string(dir.path().join(REPLICATES_FILE)).unwrap();
        assert_eq!(text.lines().count(), 7);
        let long = std::fs::read_to_string(dir.path().join(LONG_FILE)).unwrap();
        assert_eq!(long.lines().count(), 1 + 6 * 3);
    }

    #[test]
    fn json_means_match_csv_means() {
        let dir = tempfile::tempdir().unwrap();
        let r = report();
        emit_report(&r, dir.path(), &ReportFormat::ALL).unwrap();
        let summary = load_summary(dir.path().join(SUMMARY_FILE)).unwrap();
        let mut rdr = csv::Reader::from_path(dir.path().join(REPLICATES_FILE)).unwrap();
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        for cell in &summary.report.cells {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|row| &row[2] == cell.strategy.name() && row[4].parse::<usize>().unwrap() == cell.synthetic_len)
                .map(|row| row[8].parse().unwrap())
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!((mean - cell.mean(Metric::Mse).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn every_file_is_stamped() {
        let dir = tempfile::tempdir().unwrap();
        for path in emit_report(&report(), dir.path(), &ReportFormat::ALL).unwrap() {
            let text = std::fs::read_to_string(&path).unwrap();
            assert!(text.contains("abc123") && text.contains("schema_version"), "{}", path.display());
        }
    }

    #[test]
    fn csv_output_is_reproducible() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        emit_report(&report(), a.path(), &ReportFormat::ALL).unwrap();
        emit_report(&report(), b.path(), &ReportFormat::ALL).unwrap();
        for f in [REPLICATES_FILE, LONG_FILE] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        }
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        assert!(matches!(emit_report(&report(), blocker.join("sub"), &ReportFormat::ALL), Err(Error::Io { .. })));
    }
}
