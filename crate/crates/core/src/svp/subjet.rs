use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::objective::ObjectiveFunction;
use super::series::PerturbationSeries;
use super::solver::{run_svp, SolverReport, SvpOptions};
use crate::bump::{smoothstep, ScalarField};
use crate::config::GeometryConfig;
use crate::distsq::SqDistFunction;
use crate::error::{Error, Result};
use crate::hessian::HessianForm;
use crate::manifold::{ManifoldModel, Point, TangentVector};
use crate::sampling::Region;

const MAX_DOUBLINGS: usize = 8;
const BOUNDARY_FRACTION: f64 = 0.99;

/// `c(y) = H s((d(x, y) - ρ/2) / (ρ/2))`: zero on `B(x, ρ/2)`, `H` from `d = ρ` on.
#[derive(Debug, Clone)]
pub struct ConfiningTerm {
    sq: SqDistFunction,
    radius: f64,
    height: f64,
}

impl ConfiningTerm {
    pub fn new(model: &ManifoldModel, center: &Point, radius: f64, height: f64) -> Result<Self> {
        let sq = SqDistFunction::with_max_radius(model, center)?;
        if !(radius > 0.0 && radius < sq.valid_radius()) {
            return Err(Error::InvalidParameter(format!(
                "confinement radius {radius} must lie in (0, {})",
                sq.valid_radius()
            )));
        }
        if !(height > 0.0 && height.is_finite()) {
            return Err(Error::InvalidParameter("confinement height must be positive".into()));
        }
        Ok(Self { sq, radius, height })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// `(d, u)` with `u = (d - ρ/2)/(ρ/2)`, or `None` beyond the admissible radius.
    fn coordinate(&self, y: &Point) -> Result<Option<(f64, f64)>> {
        match self.sq.distance(y) {
            Ok(d) => Ok(Some((d, (2.0 * d - self.radius) / self.radius))),
            Err(Error::OutsideSafeRadius { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

impl ScalarField for ConfiningTerm {
    fn model(&self) -> &ManifoldModel {
        self.sq.model()
    }

    fn value(&self, y: &Point) -> Result<f64> {
        Ok(match self.coordinate(y)? {
            Some((_, u)) => self.height * smoothstep(u.clamp(0.0, 1.0)).0,
            None => self.height,
        })
    }

    fn gradient(&self, y: &Point) -> Result<TangentVector> {
        match self.coordinate(y)? {
            Some((d, u)) if u > 0.0 && u < 1.0 => {
                let (_, s1, _) = smoothstep(u);
                // ∇d = ∇q / 2d
                let gq = self.sq.gradient(y)?;
                Ok(gq.scaled(self.height * s1 * (2.0 / self.radius) / (2.0 * d)))
            }
            _ => Ok(TangentVector::zero(y.clone())),
        }
    }

    fn hessian(&self, y: &Point, cfg: &GeometryConfig) -> Result<HessianForm> {
        let model = self.sq.model();
        let Some((d, u)) = self.coordinate(y)? else {
            return Ok(HessianForm::zeros(model, y));
        };
        if !(u > 0.0 && u < 1.0) {
            return Ok(HessianForm::zeros(model, y));
        }
        let (_, s1, s2) = smoothstep(u);
        let du = 2.0 / self.radius;
        let mut h = self.sq.hessian(y, cfg)?;
        let gd = h.components(model, &self.sq.gradient(y)?)? / (2.0 * d);
        let outer = &gd * gd.transpose();
        // d²d = (d²q - 2 ∇d ⊗ ∇d) / 2d
        let hd = (&h.matrix - &outer * 2.0) / (2.0 * d);
        h.matrix = (outer * (s2 * du * du) + hd * (s1 * du)) * self.height;
        Ok(h)
    }
}

/// `W = φ - c`, the smooth witness of a subjet element.
#[derive(Debug, Clone)]
pub struct SubjetWitness {
    pub series: PerturbationSeries,
    pub confining: ConfiningTerm,
}

impl ScalarField for SubjetWitness {
    fn model(&self) -> &ManifoldModel {
        self.confining.model()
    }

    fn value(&self, y: &Point) -> Result<f64> {
        Ok(self.series.value(y)? - self.confining.value(y)?)
    }

    fn gradient(&self, y: &Point) -> Result<TangentVector> {
        let mut g = self.series.gradient(y)?;
        g.components -= self.confining.gradient(y)?.components;
        Ok(g)
    }

    fn hessian(&self, y: &Point, cfg: &GeometryConfig) -> Result<HessianForm> {
        let mut h = self.series.hessian(y, cfg)?;
        let mut c = self.confining.hessian(y, cfg)?;
        c.scale(-1.0);
        h.add_assign(&c)?;
        Ok(h)
    }
}

/// `(dW(z), d²W(z))` at the point `z` where `f - W` has a local minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjetElement {
    pub base: Point,
    pub first: TangentVector,
    pub second: HessianForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjetSummary {
    pub query: Point,
    pub search_radius: f64,
    pub distance_to_query: f64,
    pub confinement_height: f64,
    pub attempts: usize,
    pub element: SubjetElement,
    pub solver: SolverReport,
}

#[derive(Debug, Clone)]
pub struct SubjetExtraction {
    pub summary: SubjetSummary,
    pub witness: SubjetWitness,
}

/// Subjet element of `f` near `x`, from the perturbed minimizer of `f + c` on `B(x, ρ)`.
///
/// The confinement height starts at `f(x) - inf f + 1` and doubles (up to 8 times)
/// while the minimizer lands on the boundary of the ball.
pub fn extract_subjet(
    f: &ObjectiveFunction,
    x: &Point,
    search_radius: f64,
    eps: f64,
    k_max: usize,
    opts: &SvpOptions,
) -> Result<SubjetExtraction> {
    let model = f.model();
    let fx = f.eval(x);
    if !fx.is_finite() {
        return Err(Error::Precondition("f must be finite at the query point".into()));
    }
    let region = Region::ball(x.clone(), search_radius);
    let base = f.restricted(region.clone())?;
    let mut hints = base.hints().to_vec();
    hints.push(x.clone());
    let mut height = fx - f.lower_bound() + 1.0;
    let mut last_distance = f64::NAN;
    for attempt in 1..=MAX_DOUBLINGS + 1 {
        let confining = ConfiningTerm::new(model, x, search_radius, height)?;
        let c = confining.clone();
        let inner = f.evaluator().clone();
        let g = ObjectiveFunction::new(
            format!("{} + confinement", f.label()),
            model,
            region.clone(),
            f.lower_bound(),
            Arc::new(move |y: &Point| inner(y) + c.value(y).unwrap_or(f64::INFINITY)),
        )?
        .with_hints(hints.clone());
        let (series, report) = run_svp(&g, eps, k_max, opts)?;
        let z = report.minimizer.clone();
        let distance = model.distance(x, &z)?;
        last_distance = distance;
        if distance >= BOUNDARY_FRACTION * search_radius {
            height *= 2.0;
            continue;
        }
        let witness = SubjetWitness { series, confining };
        let element = SubjetElement {
            base: z.clone(),
            first: witness.gradient(&z)?,
            second: witness.hessian(&z, &opts.geometry)?,
        };
        return Ok(SubjetExtraction {
            summary: SubjetSummary {
                query: x.clone(),
                search_radius,
                distance_to_query: distance,
                confinement_height: height,
                attempts: attempt,
                element,
                solver: report,
            },
            witness,
        });
    }
    Err(Error::ConfinementFailed {
        distance: last_distance,
        radius: search_radius,
    })
}

/// `min (f - W)(y) - (f - W)(z)` over the grid `z + step·j·e`, `|j_i| <= half_width`,
/// in the orthonormal frame at `z`. Non-negative iff `z` is a grid-local minimum.
pub fn witness_local_min_margin(
    f: &ObjectiveFunction,
    witness: &SubjetWitness,
    z: &Point,
    step: f64,
    half_width: usize,
) -> Result<f64> {
    let model = f.model();
    let at = |y: &Point| -> Result<f64> { Ok(f.eval(y) - witness.value(y)?) };
    let center = at(z)?;
    let frame = model.orthonormal_frame(z);
    let n = frame.len();
    let side = 2 * half_width + 1;
    let mut margin = f64::INFINITY;
    for idx in 0..side.pow(n as u32) {
        let mut v = DVector::zeros(n);
        let mut rest = idx;
        for e in &frame {
            let j = (rest % side) as f64 - half_width as f64;
            rest /= side;
            v += e * (j * step);
        }
        if v.iter().all(|c| *c == 0.0) {
            continue;
        }
        let y = model.exp_map(&TangentVector::new(z.clone(), v))?;
        margin = margin.min(at(&y)? - center);
    }
    Ok(margin)
}
