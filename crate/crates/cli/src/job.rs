use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use riemsvp_core::manifold::spec::ModelSpec;
use riemsvp_core::{fixtures, GeometryConfig, ManifoldModel};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyHessian,
    VerifyBump,
    VerifyRauch,
    VerifyIndex,
    RunSvp,
    ExtractSubjet,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::VerifyHessian => "verify-hessian",
            Self::VerifyBump => "verify-bump",
            Self::VerifyRauch => "verify-rauch",
            Self::VerifyIndex => "verify-index",
            Self::RunSvp => "run-svp",
            Self::ExtractSubjet => "extract-subjet",
        }
    }

    /// Commands that always draw random samples; `verify-hessian` does so only with `samples`.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Self::VerifyIndex | Self::RunSvp | Self::ExtractSubjet)
    }
}

/// A fixture id (`"sphere2"`) or a full model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Fixture(String),
    Spec(ModelSpec),
}

impl ModelRef {
    pub fn build(&self) -> Result<ManifoldModel, CliError> {
        Ok(match self {
            Self::Fixture(id) => fixtures::model(id)?,
            Self::Spec(s) => s.build()?,
        })
    }
}

/// Sweep and solver parameters. Every key has a command-line flag of the same name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Segment lengths `ℓ`.
    pub lengths: Option<Vec<f64>>,
    /// Bump radii `δ`.
    pub deltas: Option<Vec<f64>>,
    /// Bump height, or the solver budget `ε`.
    pub eps: Option<f64>,
    /// Random samples per grid point.
    pub samples: Option<usize>,
    /// Comparison model for `verify-rauch`.
    pub comparison_model: Option<ModelRef>,
    /// Objective fixture for `run-svp` and `extract-subjet`.
    pub objective: Option<String>,
    pub k_max: Option<usize>,
    pub net_size: Option<usize>,
    pub budget: Option<usize>,
    /// Chart coordinates of the query point for `extract-subjet`.
    pub query: Option<Vec<f64>>,
    pub search_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub command: Command,
    #[serde(default)]
    pub model: Option<ModelRef>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl JobSpec {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            model: None,
            params: Params::default(),
            geometry: GeometryConfig::default(),
            seed: None,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid job file: {e}")))
    }

    /// Schema-level checks that do not need the numerical modules.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        self.geometry.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let sampled = self.command == Command::VerifyHessian && self.params.samples.is_some();
        if (self.command.is_stochastic() || sampled) && self.seed.is_none() {
            return usage(format!("{} needs a seed (--seed or \"seed\")", self.command.name()));
        }
        let p = &self.params;
        let positive = |name: &str, v: &Option<Vec<f64>>| match v {
            Some(v) if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) => {
                Err(CliError::Usage(format!("{name} must be a nonempty list of positive numbers")))
            }
            _ => Ok(()),
        };
        positive("lengths", &p.lengths)?;
        positive("deltas", &p.deltas)?;
        if let Some(e) = p.eps {
            if !(e.is_finite() && e > 0.0) {
                return usage("eps must be positive".into());
            }
        }
        if let Some(r) = p.search_radius {
            if !(r.is_finite() && r > 0.0) {
                return usage("search_radius must be positive".into());
            }
        }
        if matches!(p.samples, Some(0)) || matches!(p.k_max, Some(0)) || matches!(p.net_size, Some(0)) {
            return usage("samples, k_max and net_size must be positive".into());
        }
        if matches!(p.budget, Some(b) if b < 100) {
            return usage("budget must be at least 100 evaluations".into());
        }
        match self.command {
            Command::VerifyRauch if p.comparison_model.is_none() => usage("verify-rauch needs comparison_model".into()),
            Command::RunSvp | Command::ExtractSubjet if p.objective.is_none() => {
                usage(format!("{} needs an objective", self.command.name()))
            }
            Command::ExtractSubjet if p.query.is_none() => usage("extract-subjet needs a query point".into()),
            Command::VerifyHessian | Command::VerifyBump | Command::VerifyRauch | Command::VerifyIndex
                if self.model.is_none() =>
            {
                usage(format!("{} needs a model", self.command.name()))
            }
            _ => Ok(()),
        }
    }
}
