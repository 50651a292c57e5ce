use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::job::JobSpec;
use crate::CliError;

/// One checked row: inputs, measurements, reference bounds and the margin between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub label: String,
    pub inputs: BTreeMap<String, f64>,
    pub measured: BTreeMap<String, f64>,
    pub bounds: BTreeMap<String, f64>,
    /// Nonnegative when every check of the row holds.
    pub margin: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub runtime_seconds: f64,
}

impl ReportRecord {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            inputs: BTreeMap::new(),
            measured: BTreeMap::new(),
            bounds: BTreeMap::new(),
            margin: f64::NAN,
            tolerance: 0.0,
            passed: false,
            runtime_seconds: 0.0,
        }
    }

    pub fn input(mut self, key: &str, v: f64) -> Self {
        self.inputs.insert(key.into(), v);
        self
    }

    pub fn measured(mut self, key: &str, v: f64) -> Self {
        self.measured.insert(key.into(), v);
        self
    }

    pub fn bound(mut self, key: &str, v: f64) -> Self {
        self.bounds.insert(key.into(), v);
        self
    }

    /// Sets the margin; the record passes iff `margin >= -tolerance`.
    pub fn finish(mut self, margin: f64, tolerance: f64, runtime_seconds: f64) -> Self {
        self.margin = margin;
        self.tolerance = tolerance;
        self.passed = margin >= -tolerance;
        self.runtime_seconds = runtime_seconds;
        self
    }

    /// Like [`Self::finish`] for checks that are not a single margin.
    pub fn finish_with(mut self, margin: f64, tolerance: f64, passed: bool, runtime_seconds: f64) -> Self {
        self = self.finish(margin, tolerance, runtime_seconds);
        self.passed &= passed;
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub generated: String,
    pub job: JobSpec,
    pub records: Vec<ReportRecord>,
    pub passed: bool,
    pub runtime_seconds: f64,
    /// Nested solver output (series, solver report, subjet), when the command has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifacts: Option<serde_json::Value>,
}

impl Report {
    pub fn failing(&self) -> impl Iterator<Item = &ReportRecord> {
        self.records.iter().filter(|r| !r.passed)
    }
}

fn csv_value(v: f64) -> String {
    format!("{v:e}")
}

/// CSV body: `label`, then the union of input, measured and bound keys over all records
/// (sorted; empty cells where a record lacks a key), then `margin,tolerance,passed`.
/// Runtimes stay out so bodies are reproducible.
pub fn csv_body(records: &[ReportRecord]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if records.is_empty() {
        return Ok(String::new());
    }
    let cols = |pick: fn(&ReportRecord) -> &BTreeMap<String, f64>| {
        records.iter().flat_map(|r| pick(r).keys().cloned()).collect::<BTreeSet<_>>()
    };
    let (ci, cm, cb) = (cols(|r| &r.inputs), cols(|r| &r.measured), cols(|r| &r.bounds));
    let mut header = vec!["label".to_string()];
    header.extend(ci.iter().cloned());
    header.extend(cm.iter().cloned());
    header.extend(cb.iter().map(|k| format!("bound_{k}")));
    header.extend(["margin", "tolerance", "passed"].map(String::from));
    w.write_record(&header)?;
    for r in records {
        let get = |m: &BTreeMap<String, f64>, k: &String| m.get(k).map_or(String::new(), |v| csv_value(*v));
        let mut row = vec![r.label.clone()];
        row.extend(ci.iter().map(|k| get(&r.inputs, k)));
        row.extend(cm.iter().map(|k| get(&r.measured, k)));
        row.extend(cb.iter().map(|k| get(&r.bounds, k)));
        row.push(csv_value(r.margin));
        row.push(csv_value(r.tolerance));
        row.push(r.passed.to_string());
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

/// Writes `<command>.json` and `<command>.csv` into `dir`.
pub fn write_report(report: &Report, dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    fs::create_dir_all(dir)?;
    let json = dir.join(format!("{}.json", report.command));
    let csv = dir.join(format!("{}.csv", report.command));
    fs::write(&json, serde_json::to_string_pretty(report)? + "\n")?;
    let body = csv_body(&report.records)?;
    fs::write(&csv, format!("# generated {}\n{body}", report.generated))?;
    Ok((json, csv))
}
