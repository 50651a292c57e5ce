use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use riemsvp_cli::{list_fixtures, run_job, write_report, CliError, Command, JobSpec, ModelRef};

const DEFAULT_OUT: &str = "riemsvp-out";

/// Numerical checks and smooth variational solver on Riemannian models.
///
/// COMMAND is one of verify-hessian, verify-bump, verify-rauch, verify-index,
/// run-svp, extract-subjet or list-fixtures. Flags override the job file.
#[derive(Debug, Parser)]
#[command(name = "riemsvp", version)]
struct Cli {
    command: String,
    /// JSON job file.
    #[arg(long)]
    job: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $RIEMSVP_OUT, else ./riemsvp-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fixture id or a JSON model description.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lengths: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    deltas: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    comparison_model: Option<String>,
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    net_size: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    query: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    search_radius: Option<f64>,
    /// Substring filter for list-fixtures.
    #[arg(long)]
    filter: Option<String>,
}

fn model_ref(s: &str) -> Result<ModelRef, CliError> {
    if s.trim_start().starts_with('{') {
        serde_json::from_str(s).map_err(|e| CliError::Usage(format!("invalid model description: {e}")))
    } else {
        Ok(ModelRef::Fixture(s.to_string()))
    }
}

fn build_spec(cli: Cli) -> Result<(JobSpec, PathBuf), CliError> {
    let command = Command::from_str(&cli.command, false).map_err(|_| CliError::Usage(format!("unknown command '{}'", cli.command)))?;
    if cli.filter.is_some() {
        return Err(CliError::Usage("--filter only applies to list-fixtures".into()));
    }
    let mut spec = match &cli.job {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let spec = JobSpec::from_json(&text)?;
            if spec.command != command {
                return Err(CliError::Usage(format!(
                    "job file is for {}, not {}",
                    spec.command.name(),
                    command.name()
                )));
            }
            spec
        }
        None => JobSpec::new(command),
    };
    let p = &mut spec.params;
    macro_rules! set {
        ($($field:ident),*) => { $(if cli.$field.is_some() { p.$field = cli.$field; })* };
    }
    set!(lengths, deltas, eps, samples, objective, k_max, net_size, budget, query, search_radius);
    if let Some(m) = &cli.comparison_model {
        p.comparison_model = Some(model_ref(m)?);
    }
    if let Some(m) = &cli.model {
        spec.model = Some(model_ref(m)?);
    }
    if cli.seed.is_some() {
        spec.seed = cli.seed;
    }
    let out = cli
        .out
        .or_else(|| spec.out.clone())
        .or_else(|| std::env::var_os("RIEMSVP_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok((spec, out))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if cli.command == "list-fixtures" {
        let fx = list_fixtures(cli.filter.as_deref().unwrap_or(""));
        println!("{}", serde_json::to_string_pretty(&fx)?);
        return Ok(true);
    }
    let (spec, out) = build_spec(cli)?;
    let report = run_job(&spec)?;
    let (json, csv) = write_report(&report, &out)?;
    println!("{}: {} records, {}", report.command, report.records.len(), if report.passed { "PASS" } else { "FAIL" });
    println!("wrote {} and {}", json.display(), csv.display());
    for r in report.failing() {
        let inputs: Vec<String> = r.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
        eprintln!(
            "failed: {} [{}] (margin {:e}, tolerance {:e})",
            r.label,
            inputs.join(", "),
            r.margin,
            r.tolerance
        );
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("riemsvp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
