use std::collections::HashMap;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Provenance, TimeSeriesDataset, Unit};
use crate::error::{Error, Result};

/// Column mapping for a CSV source.
///
/// Rows are grouped by `unit_column` and ordered by the `time_columns`
/// tuple; numeric time cells compare numerically, others lexically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    pub unit_column: String,
    pub time_columns: Vec<String>,
    pub feature_columns: Vec<String>,
    #[serde(default = "default_interval")]
    pub interval: String,
}

fn default_interval() -> String {
    "unspecified".to_string()
}

impl CsvSchema {
    /// Built-in presets: `uci-air-quality` (Beijing multi-site hourly records).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "uci-air-quality" => Ok(Self {
                unit_column: "station".into(),
                time_columns: vec!["year".into(), "month".into(), "day".into(), "hour".into()],
                feature_columns: ["PM10", "SO2", "NO2", "O3", "PM2.5", "CO"].map(String::from).to_vec(),
                interval: "hourly".into(),
            }),
            other => Err(Error::config(format!("unknown schema preset {other:?}"))),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: Self = toml::from_str(text)?;
        schema.check()?;
        Ok(schema)
    }

    /// Reads a preset name (`preset:<name>`) or a TOML schema file.
    pub fn resolve(spec: &str) -> Result<Self> {
        if let Some(name) = spec.strip_prefix("preset:") {
            return Self::preset(name);
        }
        let text = std::fs::read_to_string(spec).map_err(|e| Error::io(spec, e))?;
        Self::from_toml_str(&text)
    }

    fn check(&self) -> Result<()> {
        if self.time_columns.is_empty() {
            return Err(Error::config("schema needs at least one time column"));
        }
        if self.feature_columns.is_empty() {
            return Err(Error::config("schema needs at least one feature column"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, PartialOrd)]
enum TimeKey {
    Num(f64),
    Text(String),
}

fn time_key(cell: &str) -> TimeKey {
    match cell.trim().parse::<f64>() {
        Ok(v) => TimeKey::Num(v),
        Err(_) => TimeKey::Text(cell.trim().to_string()),
    }
}

fn cmp_keys(a: &[TimeKey], b: &[TimeKey]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = match (x, y) {
            (TimeKey::Num(p), TimeKey::Num(q)) => p.total_cmp(q),
            (TimeKey::Text(p), TimeKey::Text(q)) => p.cmp(q),
            (TimeKey::Num(_), TimeKey::Text(_)) => std::cmp::Ordering::Less,
            (TimeKey::Text(_), TimeKey::Num(_)) => std::cmp::Ordering::Greater,
        };
        if ord.is_ne() {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// Parses a UTF-8 CSV with a header row into one unit per distinct unit id.
///
/// Cells that do not parse as numbers (including `NA` and empty cells)
/// become `NaN`, the missing marker consumed by imputation.
pub fn load_csv_dataset(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    schema.check()?;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(file);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::config(format!("column {name:?} not found in {}", path.display())))
    };
    let unit_col = column(&schema.unit_column)?;
    let time_cols = schema.time_columns.iter().map(|c| column(c)).collect::<Result<Vec<_>>>()?;
    let feature_cols = schema.feature_columns.iter().map(|c| column(c)).collect::<Result<Vec<_>>>()?;

    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(Vec<TimeKey>, Vec<f64>)>> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let id = record.get(unit_col).unwrap_or("").trim().to_string();
        let key = time_cols.iter().map(|&c| time_key(record.get(c).unwrap_or(""))).collect();
        let values = feature_cols
            .iter()
            .map(|&c| record.get(c).and_then(|s| s.trim().parse::<f64>().ok()).filter(|v| v.is_finite()).unwrap_or(f64::NAN))
            .collect();
        if !rows.contains_key(&id) {
            order.push(id.clone());
        }
        rows.entry(id).or_default().push((key, values));
    }
    if order.is_empty() {
        return Err(Error::data(format!("{} contains no data rows", path.display())));
    }

    let k = feature_cols.len();
    let units = order
        .into_iter()
        .map(|id| {
            let mut r = rows.remove(&id).unwrap_or_default();
            r.sort_by(|a, b| cmp_keys(&a.0, &b.0));
            let flat: Vec<f64> = r.into_iter().flat_map(|(_, v)| v).collect();
            let n = flat.len() / k;
            Unit::new(id, Array2::from_shape_vec((n, k), flat).expect("row width is K"))
        })
        .collect();
    let mut ds = TimeSeriesDataset::new(units, schema.feature_columns.clone(), schema.interval.clone())?;
    ds.provenance = Provenance { source: path.display().to_string(), seed: None, split: None };
    Ok(ds)
}
