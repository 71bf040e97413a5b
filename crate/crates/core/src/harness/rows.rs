use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observation with the bound it is checked against; `margin = bound - observed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment_id: String,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub metric_name: String,
    #[serde(with = "sig17")]
    pub observed: f64,
    #[serde(with = "sig17")]
    pub bound: f64,
    #[serde(with = "sig17")]
    pub margin: f64,
    #[serde(with = "sig17")]
    pub runtime_ms: f64,
}

impl ResultRow {
    pub fn new(experiment_id: &str, n: usize, trial: usize, seed: u64, metric: &str, observed: f64, bound: f64) -> Self {
        Self {
            experiment_id: experiment_id.to_string(),
            n,
            trial,
            seed,
            metric_name: metric.to_string(),
            observed,
            bound,
            margin: bound - observed,
            runtime_ms: 0.0,
        }
    }

    pub fn recomputed_margin(&self) -> f64 {
        self.bound - self.observed
    }
}

mod sig17 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_f64(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Scientific notation with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Inputs and value of one bound evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub experiment_id: String,
    pub n: usize,
    pub bound: String,
    pub inputs: BTreeMap<String, f64>,
    pub value: f64,
}

impl BoundRecord {
    pub fn new(experiment_id: &str, n: usize, bound: &str, inputs: &[(&str, f64)], value: f64) -> Self {
        Self {
            experiment_id: experiment_id.to_string(),
            n,
            bound: bound.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
        }
    }
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        (&a.experiment_id, a.n, a.trial, &a.metric_name).cmp(&(&b.experiment_id, b.n, b.trial, &b.metric_name))
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

const HEADER: [&str; 9] = [
    "experiment_id",
    "n",
    "trial",
    "seed",
    "metric_name",
    "observed",
    "bound",
    "margin",
    "runtime_ms",
];

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(vec![]);
    w.write_record(HEADER)?;
    for r in &sorted {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error().to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::arg(e.to_string()))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = vec![];
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Writes through a sibling temp file and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::arg(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serializes a report as CSV rows or pretty JSON and writes it atomically.
pub fn emit<T: Serialize>(report: &T, rows: &[ResultRow], format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Csv => rows_to_csv(rows)?,
        Format::Json => serde_json::to_string_pretty(report)? + "\n",
    };
    write_atomic(path, text.as_bytes())
}
