//! The squared distance `φ(x) = d(x, z)²` and the two-sided Hessian bound
//! `0 <= d²φ(x) <= 2 + (2/3) K₀ d(x, z)²` on balls below the safe radius.
//!
//! The Hessian is computed from Jacobi fields: for the segment `γ` from `z` to `x`
//! and `v ∈ T_x M`, `d²φ(x)(v, v) = 2ℓ <X'(ℓ), X(ℓ)>` where `X` is the Jacobi field
//! with `X(0) = 0`, `X(ℓ) = v`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::GeometryConfig;
use crate::error::{Error, Result};
use crate::hessian::HessianForm;
use crate::jacobi::JacobiPropagator;
use crate::manifold::{GeodesicSegment, ManifoldModel, Point, TangentVector};

#[derive(Debug, Clone)]
pub struct SqDistFunction {
    center: Point,
    model: ManifoldModel,
    valid_radius: f64,
}

impl SqDistFunction {
    /// `d(·, z)²` on the ball of radius `valid_radius < r_max` around `z`.
    pub fn new(model: &ManifoldModel, center: &Point, valid_radius: f64) -> Result<Self> {
        let limit = model.safe_radius().min(model.log_radius());
        if !(valid_radius > 0.0) || (limit.is_finite() && valid_radius >= limit) {
            return Err(Error::InvalidParameter(format!(
                "valid radius {valid_radius} must lie in (0, {limit})"
            )));
        }
        Ok(Self {
            center: center.clone(),
            model: model.clone(),
            valid_radius,
        })
    }

    /// Uses the largest admissible radius, `(1 - 1e-9) r_max`.
    pub fn with_max_radius(model: &ManifoldModel, center: &Point) -> Result<Self> {
        let limit = model.safe_radius().min(model.log_radius());
        let r = if limit.is_finite() { limit * (1.0 - 1e-9) } else { f64::INFINITY };
        Self::new(model, center, r)
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn valid_radius(&self) -> f64 {
        self.valid_radius
    }

    /// `d(x, z)`, with an error outside the valid ball.
    pub fn distance(&self, x: &Point) -> Result<f64> {
        let d = self.model.distance(&self.center, x)?;
        if d >= self.valid_radius {
            return Err(Error::OutsideSafeRadius {
                distance: d,
                radius: self.valid_radius,
            });
        }
        Ok(d)
    }

    pub fn value(&self, x: &Point) -> Result<f64> {
        Ok(self.distance(x)?.powi(2))
    }

    /// `-2 log_x(z)`.
    pub fn gradient(&self, x: &Point) -> Result<TangentVector> {
        self.distance(x)?;
        Ok(self.model.log_map(x, &self.center)?.scaled(-2.0))
    }

    /// Hessian in the canonical orthonormal frame at `x`; `2 I` at the center.
    pub fn hessian(&self, x: &Point, cfg: &GeometryConfig) -> Result<HessianForm> {
        Ok(self.hessian_along(x, cfg)?.0)
    }

    /// Value, gradient and Hessian at `x` from a single logarithm and segment.
    pub fn jet(&self, x: &Point, cfg: &GeometryConfig) -> Result<(f64, TangentVector, HessianForm)> {
        let v = self.model.log_map(&self.center, x)?;
        self.jet_from_log(x, v, cfg)
    }

    /// [`jet`](Self::jet) with `v = log_z(x)` already known.
    pub(crate) fn jet_from_log(&self, x: &Point, v: TangentVector, cfg: &GeometryConfig) -> Result<(f64, TangentVector, HessianForm)> {
        let (h, d, end) = self.hessian_from_log(x, v, cfg)?;
        // -2 log_x(z) = 2 d u for the unit end velocity u
        let g = match end {
            Some(u) => {
                let u = self.model.align(x, &u)?;
                let n = self.model.tangent_norm(&u);
                u.scaled(2.0 * d / n)
            }
            None => TangentVector::zero(x.clone()),
        };
        Ok((d * d, g, h))
    }

    /// Hessian, distance and the unit end velocity of the segment from the center (if any).
    fn hessian_along(&self, x: &Point, cfg: &GeometryConfig) -> Result<(HessianForm, f64, Option<TangentVector>)> {
        let v = self.model.log_map(&self.center, x)?;
        self.hessian_from_log(x, v, cfg)
    }

    fn hessian_from_log(&self, x: &Point, v: TangentVector, cfg: &GeometryConfig) -> Result<(HessianForm, f64, Option<TangentVector>)> {
        let d = self.model.tangent_norm(&v);
        if d >= self.valid_radius {
            return Err(Error::OutsideSafeRadius {
                distance: d,
                radius: self.valid_radius,
            });
        }
        let center = || Ok((HessianForm::scaled_identity(&self.model, x, 2.0), d, None));
        if d <= cfg.tolerance {
            return center();
        }
        let seg = match GeodesicSegment::from_log(&self.model, &self.center, x, &v, cfg) {
            Ok(s) => Arc::new(s),
            Err(Error::DegenerateSegment) => return center(),
            Err(e) => return Err(e),
        };
        let s = JacobiPropagator::new(&seg).end_form()?;
        let n = self.model.dim();
        let len = seg.length();
        let q = |v: &nalgebra::DVector<f64>| 2.0 * len * (&s * v).dot(v);
        let mut h_end = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut a = nalgebra::DVector::zeros(n);
                let mut b = nalgebra::DVector::zeros(n);
                a[i] += 1.0;
                a[j] += 1.0;
                b[i] += 1.0;
                b[j] -= 1.0;
                h_end[(i, j)] = 0.25 * (q(&a) - q(&b));
            }
        }
        // rotate from the segment's end frame to the canonical frame at x
        let last = seg.sample_count() - 1;
        let end_frame = seg.frame(last);
        let frame = self.model.orthonormal_frame(x);
        let rot = DMatrix::from_fn(n, n, |i, j| self.model.inner(x, &frame[i], &end_frame[j]));
        let h = &rot * h_end * rot.transpose();
        let h = (&h + h.transpose()) * 0.5;
        Ok((HessianForm::new(x.clone(), h, frame), d, Some(seg.end_velocity())))
    }
}

pub fn sq_dist(phi: &SqDistFunction, x: &Point) -> Result<f64> {
    phi.value(x)
}

pub fn grad_sq_dist(phi: &SqDistFunction, x: &Point) -> Result<TangentVector> {
    phi.gradient(x)
}

pub fn hessian_sq_dist(phi: &SqDistFunction, x: &Point, cfg: &GeometryConfig) -> Result<HessianForm> {
    phi.hessian(x, cfg)
}

/// Central second difference of `t ↦ φ(exp_x(t v))` with `h = fd_step^{1/2}`.
pub fn hessian_sq_dist_fd(phi: &SqDistFunction, x: &Point, v: &TangentVector, cfg: &GeometryConfig) -> Result<f64> {
    cfg.validate()?;
    let model = phi.model();
    let v = model.align(x, v)?;
    let h = cfg.second_difference_step();
    let at = |s: f64| -> Result<f64> { phi.value(&model.exp_map(&v.scaled(s))?) };
    Ok((at(h)? - 2.0 * phi.value(x)? + at(-h)?) / (h * h))
}

/// `2 + (2/3) K₀ ℓ²`.
pub fn hessian_upper_bound(k0: f64, len: f64) -> f64 {
    2.0 + 2.0 / 3.0 * k0 * len * len
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianBoundReport {
    pub length: f64,
    pub curvature_bound: f64,
    pub eigenvalues: Vec<f64>,
    pub upper_bound: f64,
    /// `λ_min`, nonnegative when the lower bound holds.
    pub lower_margin: f64,
    /// `bound - λ_max`.
    pub upper_margin: f64,
    /// `|H(γ'(ℓ), γ'(ℓ)) - 2|`.
    pub tangent_defect: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub hessian: HessianForm,
}

pub fn verify_hessian_bounds(phi: &SqDistFunction, x: &Point, cfg: &GeometryConfig) -> Result<HessianBoundReport> {
    let model = phi.model();
    let (h, len, end) = phi.hessian_along(x, cfg)?;
    let ev = h.eigenvalues();
    let bound = hessian_upper_bound(model.curvature_bound(), len);
    let tangent_defect = match end {
        Some(u) => {
            let u = u.scaled(1.0 / model.tangent_norm(&u));
            (h.quadratic(model, &u)? - 2.0).abs()
        }
        None => 0.0,
    };
    let lower_margin = ev[0];
    let upper_margin = bound - ev[ev.len() - 1];
    Ok(HessianBoundReport {
        length: len,
        curvature_bound: model.curvature_bound(),
        upper_bound: bound,
        lower_margin,
        upper_margin,
        tangent_defect,
        tolerance: cfg.tolerance,
        passed: lower_margin >= -cfg.tolerance && upper_margin >= -cfg.tolerance,
        eigenvalues: ev,
        hessian: h,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub length: f64,
    pub comparison_curvature: f64,
    /// `<X'(ℓ), X(ℓ)>` of the Jacobi field with `X(0) = 0`, `X(ℓ) = v`.
    pub pairing: f64,
    /// `√K₀ cot(√K₀ ℓ) ‖v‖²` (`‖v‖²/ℓ` when `K₀ = 0`).
    pub comparison_value: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Lower bound `<X'(ℓ), X(ℓ)> >= √K₀ cot(√K₀ ℓ) ‖v‖²` with the model's `K₀`.
pub fn verify_lower_bound_eq8(
    phi: &SqDistFunction,
    x: &Point,
    v: &TangentVector,
    cfg: &GeometryConfig,
) -> Result<LowerBoundReport> {
    verify_lower_bound_with(phi, x, v, phi.model().curvature_bound(), cfg)
}

/// As [`verify_lower_bound_eq8`] against any comparison curvature `k0 >= K₀`.
pub fn verify_lower_bound_with(
    phi: &SqDistFunction,
    x: &Point,
    v: &TangentVector,
    k0: f64,
    cfg: &GeometryConfig,
) -> Result<LowerBoundReport> {
    let model = phi.model();
    if k0 < model.curvature_bound() {
        return Err(Error::InvalidParameter(format!(
            "comparison curvature {k0} is below the model bound {}",
            model.curvature_bound()
        )));
    }
    let len = phi.distance(x)?;
    if len <= cfg.tolerance {
        return Err(Error::DegenerateSegment);
    }
    if k0 > 0.0 && len >= std::f64::consts::PI / (2.0 * k0.sqrt()) {
        return Err(Error::OutsideSafeRadius {
            distance: len,
            radius: std::f64::consts::PI / (2.0 * k0.sqrt()),
        });
    }
    let v = model.align(x, v)?;
    let seg = Arc::new(GeodesicSegment::between(model, phi.center(), x, cfg)?);
    let vn = model.tangent_norm(&v);
    let along = model.tangent_inner(&seg.end_velocity(), &v)?;
    if along.abs() > 1e-10 * vn.max(1.0) {
        return Err(Error::NotOrthogonal(along.abs()));
    }
    let c = seg.frame_components(seg.sample_count() - 1, &v)?;
    let field = JacobiPropagator::new(&seg).bvp_components(&c)?;
    let pairing = field.end_pairing();
    let comparison_value = if k0 > 0.0 {
        let s = k0.sqrt();
        s * (s * len).cos() / (s * len).sin() * vn * vn
    } else {
        vn * vn / len
    };
    let margin = pairing - comparison_value;
    Ok(LowerBoundReport {
        length: len,
        comparison_curvature: k0,
        pairing,
        comparison_value,
        margin,
        tolerance: cfg.tolerance,
        passed: margin >= -cfg.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{make_model, ModelKind};
    use std::f64::consts::PI;

    fn at_distance(model: &ManifoldModel, len: f64) -> (Point, Point) {
        let z = model.reference_point();
        let u = model.orthonormal_frame(&z)[0].clone();
        let x = model.exp_map(&TangentVector::new(z.clone(), u * len)).unwrap();
        (z, x)
    }

    #[test]
    fn euclidean_hessian_is_twice_identity() {
        let cfg = GeometryConfig::default();
        let m = make_model(ModelKind::Euclidean { dim: 3 }).unwrap();
        let z = m.point(&[0.1, 0.2, 0.3]).unwrap();
        let phi = SqDistFunction::with_max_radius(&m, &z).unwrap();
        let x = m.point(&[1.0, -0.5, 2.0]).unwrap();
        let h = phi.hessian(&x, &cfg).unwrap();
        assert!((h.matrix - DMatrix::identity(3, 3) * 2.0).amax() < 1e-9);
        let g = phi.gradient(&x).unwrap();
        assert!((g.components - (&x.coords - &z.coords) * 2.0).amax() < 1e-14);
        assert_eq!(phi.hessian(&z, &cfg).unwrap().matrix, DMatrix::identity(3, 3) * 2.0);
    }

    #[test]
    fn sphere_and_hyperbolic_eigenvalues() {
        let cfg = GeometryConfig::default();
        let s = make_model(ModelKind::Sphere { dim: 2, radius: 1.0 }).unwrap();
        let (z, x) = at_distance(&s, PI / 4.0);
        let phi = SqDistFunction::with_max_radius(&s, &z).unwrap();
        let ev = phi.hessian(&x, &cfg).unwrap().eigenvalues();
        assert!((ev[0] - PI / 2.0).abs() < 1e-6 && (ev[1] - 2.0).abs() < 1e-6);
        let h = make_model(ModelKind::Hyperbolic { dim: 2, curvature: -1.0 }).unwrap();
        let (z, x) = at_distance(&h, 0.5);
        let phi = SqDistFunction::with_max_radius(&h, &z).unwrap();
        let ev = phi.hessian(&x, &cfg).unwrap().eigenvalues();
        assert!((ev[1] - 1.0 / 0.5_f64.tanh()).abs() < 1e-6 && (ev[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn fd_oracle_agrees() {
        let cfg = GeometryConfig::default();
        let s = make_model(ModelKind::Sphere { dim: 2, radius: 1.0 }).unwrap();
        let (z, x) = at_distance(&s, PI / 4.0);
        let phi = SqDistFunction::with_max_radius(&s, &z).unwrap();
        let frame = s.orthonormal_frame(&x);
        let h = phi.hessian(&x, &cfg).unwrap();
        for e in &frame {
            let v = s.tangent(&x, e.as_slice());
            let fd = hessian_sq_dist_fd(&phi, &x, &v, &cfg).unwrap();
            assert!((fd - h.quadratic(&s, &v).unwrap()).abs() < 1e-4);
        }
    }

    #[test]
    fn bound_reports() {
        let cfg = GeometryConfig::default();
        let s = make_model(ModelKind::Sphere { dim: 2, radius: 1.0 }).unwrap();
        let (z, x) = at_distance(&s, 1.4);
        let phi = SqDistFunction::with_max_radius(&s, &z).unwrap();
        let r = verify_hessian_bounds(&phi, &x, &cfg).unwrap();
        assert!(r.passed && (r.lower_margin - 2.8 / 1.4_f64.tan()).abs() < 1e-6);
        assert!(r.tangent_defect < 1e-6);
        let seg = GeodesicSegment::between(&s, &z, &x, &cfg).unwrap();
        let v = seg.vector_from_frame(seg.sample_count() - 1, &nalgebra::DVector::from_vec(vec![0.0, 1.0]));
        let lb = verify_lower_bound_eq8(&phi, &x, &v, &cfg).unwrap();
        assert!(lb.passed && lb.margin.abs() < 1e-8);
        let bad = verify_lower_bound_eq8(&phi, &x, &seg.end_velocity(), &cfg).unwrap_err();
        assert!(matches!(bad, Error::NotOrthogonal(_)));
    }
}
