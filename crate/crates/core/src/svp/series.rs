use serde::{Deserialize, Serialize};

use crate::bump::{BumpFunction, BumpSpec, ScalarField};
use crate::config::GeometryConfig;
use crate::error::{Error, Result};
use crate::hessian::HessianForm;
use crate::manifold::{ManifoldModel, Point, TangentVector};

/// Per-step certificate `(f - φ_new)(x_k) < inf_net (f - φ_old) <= inf_{d(x, x_k) >= δ_k} (f - φ_new)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCertificate {
    /// `(f - φ_new)(x_k)`.
    pub new_value: f64,
    /// `inf` of `f - φ_old` over the net.
    pub net_inf: f64,
    /// `inf` of `f - φ_new` over net points outside `B(x_k, δ_k)`.
    pub exterior_inf: f64,
    pub radius: f64,
    pub net_size: usize,
    pub net_resolution: f64,
    pub passed: bool,
}

impl StepCertificate {
    pub fn gap(&self) -> f64 {
        self.exterior_inf - self.new_value
    }
}

/// Provenance of one solver step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub n_k: usize,
    pub eps_k: f64,
    pub center: Point,
    /// `(f - φ_old)(x_k)`.
    pub search_value: f64,
    pub gap_estimate: f64,
    pub evaluations: usize,
    pub certificate: StepCertificate,
}

/// `φ = Σ b_k` with a ledger of certified Y-norm bounds, `Σ ledger < total_budget`.
#[derive(Debug, Clone)]
pub struct PerturbationSeries {
    model: ManifoldModel,
    bumps: Vec<BumpFunction>,
    ledger: Vec<f64>,
    total_budget: f64,
    provenance: Vec<StepRecord>,
}

/// JSON form of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub total_budget: f64,
    pub bumps: Vec<BumpSpec>,
    pub ledger: Vec<f64>,
    pub provenance: Vec<StepRecord>,
}

impl PerturbationSeries {
    pub fn new(model: &ManifoldModel, total_budget: f64) -> Result<Self> {
        if !(total_budget > 0.0 && total_budget.is_finite()) {
            return Err(Error::InvalidParameter(format!("budget {total_budget} must be positive")));
        }
        Ok(Self {
            model: model.clone(),
            bumps: Vec::new(),
            ledger: Vec::new(),
            total_budget,
            provenance: Vec::new(),
        })
    }

    pub fn from_spec(model: &ManifoldModel, spec: &SeriesSpec) -> Result<Self> {
        let mut s = Self::new(model, spec.total_budget)?;
        for b in &spec.bumps {
            s.push(BumpFunction::from_spec(model, b)?)?;
        }
        s.provenance = spec.provenance.clone();
        Ok(s)
    }

    pub fn spec(&self) -> SeriesSpec {
        SeriesSpec {
            total_budget: self.total_budget,
            bumps: self.bumps.iter().map(|b| b.spec()).collect(),
            ledger: self.ledger.clone(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn bumps(&self) -> &[BumpFunction] {
        &self.bumps
    }

    pub fn ledger(&self) -> &[f64] {
        &self.ledger
    }

    pub fn ledger_total(&self) -> f64 {
        self.ledger.iter().sum()
    }

    pub fn total_budget(&self) -> f64 {
        self.total_budget
    }

    pub fn provenance(&self) -> &[StepRecord] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.bumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bumps.is_empty()
    }

    /// Appends a bump; radii must strictly decrease and the ledger must stay below budget.
    pub fn push(&mut self, bump: BumpFunction) -> Result<()> {
        if let Some(last) = self.bumps.last() {
            if !(bump.delta() < last.delta()) {
                return Err(Error::Precondition(format!(
                    "bump radius {} does not decrease below {}",
                    bump.delta(),
                    last.delta()
                )));
            }
        }
        let bound = bump.certified_bound();
        if !(self.ledger_total() + bound < self.total_budget) {
            return Err(Error::Precondition(format!(
                "ledger {} + {bound} would reach the budget {}",
                self.ledger_total(),
                self.total_budget
            )));
        }
        self.bumps.push(bump);
        self.ledger.push(bound);
        Ok(())
    }

    pub(crate) fn record(&mut self, step: StepRecord) {
        self.provenance.push(step);
    }

    /// The first `k` bumps.
    pub fn prefix(&self, k: usize) -> Self {
        let k = k.min(self.bumps.len());
        Self {
            model: self.model.clone(),
            bumps: self.bumps[..k].to_vec(),
            ledger: self.ledger[..k].to_vec(),
            total_budget: self.total_budget,
            provenance: self.provenance[..k.min(self.provenance.len())].to_vec(),
        }
    }

    /// Bumps whose support contains `x` (linear scan over the centers).
    fn active(&self, x: &Point) -> Result<Vec<&BumpFunction>> {
        let mut out = Vec::new();
        for b in &self.bumps {
            if b.contains(x)? {
                out.push(b);
            }
        }
        Ok(out)
    }
}

impl ScalarField for PerturbationSeries {
    fn model(&self) -> &ManifoldModel {
        &self.model
    }

    fn value(&self, x: &Point) -> Result<f64> {
        let mut v = 0.0;
        for b in &self.bumps {
            v += b.value(x)?;
        }
        Ok(v)
    }

    fn gradient(&self, x: &Point) -> Result<TangentVector> {
        let mut g = TangentVector::zero(x.clone());
        for b in self.active(x)? {
            g.components += b.gradient(x)?.components;
        }
        Ok(g)
    }

    fn hessian(&self, x: &Point, cfg: &GeometryConfig) -> Result<HessianForm> {
        let mut h = HessianForm::zeros(&self.model, x);
        for b in self.active(x)? {
            h.add_assign(&b.hessian(x, cfg)?)?;
        }
        Ok(h)
    }

    fn jet(&self, x: &Point, cfg: &GeometryConfig) -> Result<(f64, TangentVector, HessianForm)> {
        let mut v = 0.0;
        let mut g = TangentVector::zero(x.clone());
        let mut h = HessianForm::zeros(&self.model, x);
        for b in &self.bumps {
            let (bv, bg, bh) = b.jet(x, cfg)?;
            v += bv;
            g.components += self.model.align(x, &bg)?.components;
            h.add_assign(&bh)?;
        }
        Ok((v, g, h))
    }
}
