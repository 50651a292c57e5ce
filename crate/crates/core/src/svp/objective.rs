use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, Point};
use crate::sampling::Region;

/// `x ↦ f(x) ∈ ℝ ∪ {+∞}`.
pub type Evaluator = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// A lower semicontinuous objective on a compact sampling region.
#[derive(Clone)]
pub struct ObjectiveFunction {
    label: String,
    model: ManifoldModel,
    evaluator: Evaluator,
    lower_bound: f64,
    region: Region,
    hints: Vec<Point>,
}

impl fmt::Debug for ObjectiveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveFunction")
            .field("label", &self.label)
            .field("model", &self.model)
            .field("lower_bound", &self.lower_bound)
            .field("region", &self.region)
            .field("hints", &self.hints.len())
            .finish()
    }
}

impl ObjectiveFunction {
    pub fn new(
        label: impl Into<String>,
        model: &ManifoldModel,
        region: Region,
        lower_bound: f64,
        evaluator: Evaluator,
    ) -> Result<Self> {
        region.validate(model)?;
        if !lower_bound.is_finite() {
            return Err(Error::InvalidParameter("lower bound must be finite".into()));
        }
        Ok(Self {
            label: label.into(),
            model: model.clone(),
            evaluator,
            lower_bound,
            region,
            hints: Vec::new(),
        })
    }

    /// Points (discontinuities, kinks) around which nets are refined.
    pub fn with_hints(mut self, hints: Vec<Point>) -> Self {
        self.hints = hints;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn hints(&self) -> &[Point] {
        &self.hints
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn eval(&self, x: &Point) -> f64 {
        (self.evaluator)(x)
    }

    /// Same objective on another region (hints outside it are dropped).
    pub fn restricted(&self, region: Region) -> Result<Self> {
        region.validate(&self.model)?;
        let hints = self
            .hints
            .iter()
            .filter(|h| region.contains(&self.model, h))
            .cloned()
            .collect();
        Ok(Self {
            region,
            hints,
            ..self.clone()
        })
    }

    /// Checks `f >= lower_bound` and `f ≢ +∞` on sampled values.
    pub fn check_values(&self, values: &[f64]) -> Result<()> {
        if values.iter().all(|v| *v == f64::INFINITY) {
            return Err(Error::EmptyDomain);
        }
        if let Some(v) = values.iter().find(|v| v.is_nan() || **v < self.lower_bound) {
            return Err(Error::Precondition(format!(
                "objective value {v} below the declared lower bound {}",
                self.lower_bound
            )));
        }
        Ok(())
    }
}
