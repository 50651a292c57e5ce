//! C² bump functions with explicit derivative constants.
//!
//! The profile is `θ(t) = 1 - s(t/δ²)` with the quintic smoothstep
//! `s(u) = 6u⁵ - 15u⁴ + 10u³` clamped to `[0, 1]`, so that
//! `max|θ'| = 1.875/δ²` and `max|θ''| = (10/√3)/δ⁴`. A bump is `b = ε θ(d(·, z)²)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::GeometryConfig;
use crate::distsq::SqDistFunction;
use crate::error::{Error, Result};
use crate::hessian::HessianForm;
use crate::manifold::{ManifoldModel, Point, TangentVector};
use crate::sampling::Region;

/// `max |θ'| δ²`.
pub const PROFILE_D1_MAX: f64 = 1.875;
/// `max |θ''| δ⁴ = 10/√3`.
pub const PROFILE_D2_MAX: f64 = 5.773_502_691_896_258;

/// Quintic smoothstep and its first two derivatives at `u` (clamped to `[0, 1]`).
pub fn smoothstep(u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let u2 = u * u;
    let s = u2 * u * (10.0 + u * (-15.0 + 6.0 * u));
    let ds = 30.0 * u2 * (1.0 - u) * (1.0 - u);
    let d2s = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
    (s, ds, d2s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothProfile {
    delta: f64,
}

pub fn make_profile(delta: f64) -> Result<SmoothProfile> {
    SmoothProfile::new(delta)
}

impl SmoothProfile {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("profile radius {delta} must be positive")));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `(θ(t), θ'(t), θ''(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let d2 = self.delta * self.delta;
        let (s, ds, d2s) = smoothstep(t / d2);
        (1.0 - s, -ds / d2, -d2s / (d2 * d2))
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn d1_max(&self) -> f64 {
        PROFILE_D1_MAX / self.delta.powi(2)
    }

    pub fn d2_max(&self) -> f64 {
        PROFILE_D2_MAX / self.delta.powi(4)
    }
}

/// A real function with a gradient and a Hessian on a model.
pub trait ScalarField: Send + Sync {
    fn model(&self) -> &ManifoldModel;
    fn value(&self, x: &Point) -> Result<f64>;
    fn gradient(&self, x: &Point) -> Result<TangentVector>;
    fn hessian(&self, x: &Point, cfg: &GeometryConfig) -> Result<HessianForm>;

    /// Value, gradient and Hessian together; override when they share work.
    fn jet(&self, x: &Point, cfg: &GeometryConfig) -> Result<(f64, TangentVector, HessianForm)> {
        Ok((self.value(x)?, self.gradient(x)?, self.hessian(x, cfg)?))
    }
}

/// `R = 46 + 2 K₀ r²` for the model's bumpability radius `r`.
pub fn bumpability_constant(model: &ManifoldModel) -> f64 {
    let r = model.bumpability_radius();
    46.0 + 2.0 * model.curvature_bound() * r * r
}

/// JSON form of a bump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: Point,
    pub delta: f64,
    pub height: f64,
}

#[derive(Debug, Clone)]
pub struct BumpFunction {
    center: Point,
    delta: f64,
    height: f64,
    profile: SmoothProfile,
    sq: SqDistFunction,
}

impl BumpFunction {
    /// `ε θ(d(·, z)²)` for `0 < δ < r_max` and `ε >= 0`.
    pub fn new(model: &ManifoldModel, center: &Point, delta: f64, height: f64) -> Result<Self> {
        if !(height >= 0.0 && height.is_finite()) {
            return Err(Error::InvalidParameter(format!("bump height {height} must be nonnegative")));
        }
        let sq = SqDistFunction::with_max_radius(model, center)?;
        if delta >= sq.valid_radius() {
            return Err(Error::InvalidParameter(format!(
                "bump radius {delta} must be below {}",
                sq.valid_radius()
            )));
        }
        Ok(Self {
            center: center.clone(),
            delta,
            height,
            profile: SmoothProfile::new(delta)?,
            sq,
        })
    }

    pub fn from_spec(model: &ManifoldModel, spec: &BumpSpec) -> Result<Self> {
        Self::new(model, &spec.center, spec.delta, spec.height)
    }

    pub fn spec(&self) -> BumpSpec {
        BumpSpec {
            center: self.center.clone(),
            delta: self.delta,
            height: self.height,
        }
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn profile(&self) -> &SmoothProfile {
        &self.profile
    }

    /// `R ε (1 + 1/δ + 1/δ²)`, a bound for the Y-norm.
    pub fn certified_bound(&self) -> f64 {
        let d = self.delta;
        bumpability_constant(self.sq.model()) * self.height * (1.0 + 1.0 / d + 1.0 / (d * d))
    }

    /// `d(x, z)` when `x` lies in the open support ball.
    pub fn support_distance(&self, x: &Point) -> Result<Option<f64>> {
        match self.sq.model().distance(&self.center, x) {
            Ok(d) if d < self.delta => Ok(Some(d)),
            Ok(_) | Err(Error::OutsideSafeRadius { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn contains(&self, x: &Point) -> Result<bool> {
        Ok(self.support_distance(x)?.is_some())
    }
}

impl ScalarField for BumpFunction {
    fn model(&self) -> &ManifoldModel {
        self.sq.model()
    }

    fn value(&self, x: &Point) -> Result<f64> {
        Ok(match self.support_distance(x)? {
            Some(d) => self.height * self.profile.theta(d * d),
            None => 0.0,
        })
    }

    fn gradient(&self, x: &Point) -> Result<TangentVector> {
        match self.support_distance(x)? {
            Some(d) => {
                let (_, d1, _) = self.profile.eval(d * d);
                Ok(self.sq.gradient(x)?.scaled(self.height * d1))
            }
            None => Ok(TangentVector::zero(x.clone())),
        }
    }

    fn hessian(&self, x: &Point, cfg: &GeometryConfig) -> Result<HessianForm> {
        let model = self.sq.model();
        let Some(d) = self.support_distance(x)? else {
            return Ok(HessianForm::zeros(model, x));
        };
        let (_, d1, d2) = self.profile.eval(d * d);
        let mut h = self.sq.hessian(x, cfg)?;
        let g = h.components(model, &self.sq.gradient(x)?)?;
        h.matrix = (&h.matrix * d1 + &g * g.transpose() * d2) * self.height;
        Ok(h)
    }

    fn jet(&self, x: &Point, cfg: &GeometryConfig) -> Result<(f64, TangentVector, HessianForm)> {
        let model = self.sq.model();
        let zero = || Ok((0.0, TangentVector::zero(x.clone()), HessianForm::zeros(model, x)));
        let v = match model.log_map(&self.center, x) {
            Ok(v) => v,
            Err(Error::OutsideSafeRadius { .. }) => return zero(),
            Err(e) => return Err(e),
        };
        let d = model.tangent_norm(&v);
        if d >= self.delta {
            return zero();
        }
        let (t, d1, d2) = self.profile.eval(d * d);
        let (_, grad, mut h) = self.sq.jet_from_log(x, v, cfg)?;
        let g = h.components(model, &grad)?;
        h.matrix = (&h.matrix * d1 + &g * g.transpose() * d2) * self.height;
        Ok((self.height * t, grad.scaled(self.height * d1), h))
    }
}

/// Bump of height `ε` and radius `δ < r` at `p`.
pub fn scaled_bump(p: &Point, delta: f64, eps: f64, model: &ManifoldModel) -> Result<BumpFunction> {
    let r = model.bumpability_radius();
    if !(delta > 0.0 && delta < r) {
        return Err(Error::InvalidParameter(format!("bump radius {delta} must lie in (0, {r})")));
    }
    BumpFunction::new(model, p, delta, eps)
}

/// Sampled `max{‖f‖∞, ‖df‖∞, ‖d²f‖∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YNormEstimate {
    pub sup_value: f64,
    pub sup_grad: f64,
    pub sup_hess: f64,
    pub sample_count: usize,
    pub certified_bound: Option<f64>,
}

impl YNormEstimate {
    pub fn estimate(&self) -> f64 {
        self.sup_value.max(self.sup_grad).max(self.sup_hess)
    }

    /// Whether the estimate stays below the certified bound (true when there is none).
    pub fn within_certificate(&self) -> bool {
        self.certified_bound.is_none_or(|b| self.estimate() <= b)
    }

    pub fn with_certificate(mut self, bound: f64) -> Self {
        self.certified_bound = Some(bound);
        self
    }
}

/// Sup norms of `f`, `df`, `d²f` over `points`.
pub fn estimate_y_norm_at(f: &dyn ScalarField, points: &[Point], cfg: &GeometryConfig) -> Result<YNormEstimate> {
    if points.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let model = f.model();
    let rows: Result<Vec<(f64, f64, f64)>> = points
        .par_iter()
        .map(|x| {
            let (v, g, h) = f.jet(x, cfg)?;
            Ok((v.abs(), model.tangent_norm(&g), h.operator_norm()))
        })
        .collect();
    let rows = rows?;
    let sup = |i: usize| {
        rows.iter()
            .map(|r| [r.0, r.1, r.2][i])
            .fold(0.0, f64::max)
    };
    Ok(YNormEstimate {
        sup_value: sup(0),
        sup_grad: sup(1),
        sup_hess: sup(2),
        sample_count: rows.len(),
        certified_bound: None,
    })
}

/// Sup norms over a net of `sample_count` points of `region`.
pub fn estimate_y_norm(
    f: &dyn ScalarField,
    region: &Region,
    sample_count: usize,
    cfg: &GeometryConfig,
) -> Result<YNormEstimate> {
    let net = region.net(f.model(), sample_count, None)?;
    estimate_y_norm_at(f, &net.points, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpabilityReport {
    pub model: String,
    pub delta: f64,
    pub height: f64,
    /// Bumpability radius `r`.
    pub radius: f64,
    /// `R = 46 + 2 K₀ r²`.
    pub constant: f64,
    pub center_value: f64,
    /// Samples with `d(x, z) >= δ` at which `b`, `db` or `d²b` was nonzero.
    pub support_violations: usize,
    pub support_samples: usize,
    pub estimate: YNormEstimate,
    /// `6 ε / δ`.
    pub grad_bound: f64,
    /// `R ε / δ`.
    pub grad_bound_r: f64,
    /// `R ε / δ²`.
    pub hess_bound: f64,
    pub center_ok: bool,
    pub support_ok: bool,
    pub gradient_ok: bool,
    pub hessian_ok: bool,
    pub passed: bool,
}

/// Checks the four bumpability clauses on a radial-angular net of the support,
/// the center and shells at and beyond `δ`.
pub fn verify_bumpability_constants(
    b: &BumpFunction,
    cfg: &GeometryConfig,
    sample_count: usize,
) -> Result<BumpabilityReport> {
    if sample_count < 1000 {
        return Err(Error::TooFewSamples {
            needed: 1000,
            got: sample_count,
        });
    }
    let model = b.model();
    let z = b.center();
    let delta = b.delta();
    let eps = b.height();
    let mut interior = Region::ball(z.clone(), delta).net(model, sample_count, None)?.points;
    interior.push(z.clone());
    let est = estimate_y_norm_at(b, &interior, cfg)?.with_certificate(b.certified_bound());
    // shells: exactly δ and beyond, kept inside the admissible radius
    let outer = (1.25 * delta).min(0.5 * (delta + model.safe_radius().min(model.log_radius())));
    let frame = model.orthonormal_frame(z);
    let mut shell = Vec::new();
    let dirs = 64;
    for j in 0..dirs {
        let a = 2.0 * std::f64::consts::PI * j as f64 / dirs as f64;
        let mut dir = &frame[0] * a.cos();
        if frame.len() > 1 {
            dir += &frame[1] * a.sin();
        } else if j % 2 == 1 {
            dir = -dir;
        }
        for rad in [delta, 0.5 * (delta + outer), outer] {
            if let Ok(p) = model.exp_map(&TangentVector::new(z.clone(), &dir * rad)) {
                shell.push(p);
            }
        }
    }
    let mut violations = 0;
    let mut support_samples = 0;
    for p in &shell {
        if b.support_distance(p)?.is_some() {
            continue;
        }
        support_samples += 1;
        let v = b.value(p)?;
        let g = b.gradient(p)?;
        let h = b.hessian(p, cfg)?;
        if v != 0.0 || g.components.amax() != 0.0 || h.matrix.amax() != 0.0 {
            violations += 1;
        }
    }
    let center_value = b.value(z)?;
    let r_const = bumpability_constant(model);
    let grad_bound = 6.0 * eps / delta;
    let grad_bound_r = r_const * eps / delta;
    let hess_bound = r_const * eps / (delta * delta);
    let center_ok = center_value == eps;
    let support_ok = violations == 0 && support_samples > 0;
    let gradient_ok = est.sup_grad <= grad_bound && grad_bound <= grad_bound_r;
    let hessian_ok = est.sup_hess <= hess_bound;
    Ok(BumpabilityReport {
        model: model.label().to_string(),
        delta,
        height: eps,
        radius: model.bumpability_radius(),
        constant: r_const,
        center_value,
        support_violations: violations,
        support_samples,
        grad_bound,
        grad_bound_r,
        hess_bound,
        center_ok,
        support_ok,
        gradient_ok,
        hessian_ok,
        passed: center_ok && support_ok && gradient_ok && hessian_ok && est.within_certificate(),
        estimate: est,
    })
}
