//! Job files, sweeps and report writers behind the `riemsvp` binary.
//!
//! A job is a JSON document naming a command, a model and sweep parameters:
//!
//! ```json
//! {"command": "verify-hessian", "model": "sphere2", "params": {"lengths": [0.5, 1.0]}, "seed": 1}
//! ```
//!
//! [`run_job`] runs it and returns a [`Report`] with one [`ReportRecord`] per checked row;
//! [`write_report`] stores it as `<command>.json` plus a `<command>.csv` table.

mod commands;
pub mod job;
pub mod report;

use std::time::Instant;

pub use commands::list_fixtures;
pub use job::{Command, JobSpec, ModelRef, Params};
pub use report::{csv_body, write_report, Report, ReportRecord};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] riemsvp_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for usage errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// Validates and runs a job.
pub fn run_job(spec: &JobSpec) -> Result<Report, CliError> {
    spec.validate()?;
    let start = Instant::now();
    let (records, artifacts) = commands::dispatch(spec)?;
    let passed = !records.is_empty() && records.iter().all(|r| r.passed);
    Ok(Report {
        command: spec.command.name().to_string(),
        generated: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        job: spec.clone(),
        records,
        passed,
        runtime_seconds: start.elapsed().as_secs_f64(),
        artifacts,
    })
}
