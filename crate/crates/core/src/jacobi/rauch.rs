//! Numerical check of the Rauch comparison inequalities for a pair of models.

use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{constant_curvature_jacobi, ivp_components, Boundary};
use crate::config::GeometryConfig;
use crate::error::{Error, Result};
use crate::manifold::{GeodesicSegment, ManifoldModel};

/// Tolerance of the comparison inequalities.
pub const RAUCH_TOLERANCE: f64 = 1e-7;

const CURVATURE_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RauchSample {
    pub t: f64,
    /// `‖J(t)‖` on the less curved model.
    pub norm: f64,
    /// `‖J̃(t)‖` on the more curved model.
    pub norm_tilde: f64,
    /// `<J', J> / <J, J>`.
    pub ratio: f64,
    pub ratio_tilde: f64,
    pub closed_norm: Option<f64>,
    pub closed_norm_tilde: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RauchReport {
    pub model: String,
    pub model_tilde: String,
    pub length: f64,
    pub norm_x0p: f64,
    /// Largest sampled sectional curvature of `M`.
    pub max_curvature: f64,
    /// Smallest sampled sectional curvature of `M̃`.
    pub min_curvature_tilde: f64,
    pub precondition_ok: bool,
    pub samples: Vec<RauchSample>,
    /// `min_t (‖J‖ - ‖J̃‖)`.
    pub norm_margin: f64,
    /// `min_t (ratio - ratio_tilde)`.
    pub ratio_margin: f64,
    /// Largest deviation of the integrated norms from the constant-curvature closed form.
    pub closed_form_error: Option<f64>,
    pub tolerance: f64,
    /// `None` when the curvature ordering fails on the samples.
    pub passed: Option<bool>,
}

fn sampled_curvatures(model: &ManifoldModel, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = model.reference_point();
    let radius = (0.5 * model.safe_radius()).min(1.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..CURVATURE_SAMPLES {
        let x = model.random_point_near(&center, radius, &mut rng)?;
        let frame = model.orthonormal_frame(&x);
        let u = model.random_unit(&x, &mut rng);
        // rotate a second frame vector away from u
        let mut w = frame[1].clone();
        if model.inner(&x, &w, &u.components).abs() > 0.9 {
            w = frame[0].clone();
        }
        let k = model.sectional_curvature(&u, &model.tangent(&x, w.as_slice()))?;
        lo = lo.min(k);
        hi = hi.max(k);
    }
    Ok((lo, hi))
}

fn orthogonal_field(
    model: &ManifoldModel,
    len: f64,
    norm: f64,
    cfg: &GeometryConfig,
) -> Result<super::FieldAlongGeodesic> {
    let x = model.reference_point();
    let frame = model.orthonormal_frame(&x);
    let seg = Arc::new(GeodesicSegment::from_direction(model, &model.tangent(&x, frame[0].as_slice()), len, cfg)?);
    let mut d0 = DVector::zeros(model.dim());
    d0[1] = norm;
    ivp_components(&seg, &DVector::zeros(model.dim()), &d0)
}

/// Compares orthogonal Jacobi fields with `J(0) = 0`, `‖J'(0)‖ = norm_x0p` on `M`
/// (less curved) and `M̃` (more curved) along geodesics of length `ℓ`.
pub fn rauch_compare(
    m: &ManifoldModel,
    m_tilde: &ManifoldModel,
    len: f64,
    norm_x0p: f64,
    cfg: &GeometryConfig,
) -> Result<RauchReport> {
    cfg.validate()?;
    if m.dim() != m_tilde.dim() || m.dim() < 2 {
        return Err(Error::InvalidParameter("models must share a dimension of at least 2".into()));
    }
    if !(len > 0.0 && norm_x0p > 0.0) {
        return Err(Error::InvalidParameter("length and initial speed must be positive".into()));
    }
    let conj = |model: &ManifoldModel| {
        let k0 = model.curvature_bound();
        if k0 > 0.0 {
            std::f64::consts::PI / k0.sqrt()
        } else {
            f64::INFINITY
        }
    };
    let conjugate_radius = conj(m).min(conj(m_tilde)).min(m.injectivity_radius()).min(m_tilde.injectivity_radius());
    if len >= conjugate_radius {
        return Err(Error::Precondition(format!(
            "length {len} is not below the conjugate radius {conjugate_radius}"
        )));
    }
    let (_, max_curvature) = sampled_curvatures(m, 1)?;
    let (min_curvature_tilde, _) = sampled_curvatures(m_tilde, 2)?;
    let precondition_ok = max_curvature <= min_curvature_tilde + 1e-9;
    let mut report = RauchReport {
        model: m.label().to_string(),
        model_tilde: m_tilde.label().to_string(),
        length: len,
        norm_x0p,
        max_curvature,
        min_curvature_tilde,
        precondition_ok,
        samples: Vec::new(),
        norm_margin: f64::NAN,
        ratio_margin: f64::NAN,
        closed_form_error: None,
        tolerance: RAUCH_TOLERANCE,
        passed: None,
    };
    if !precondition_ok {
        return Ok(report);
    }
    let j = orthogonal_field(m, len, norm_x0p, cfg)?;
    let jt = orthogonal_field(m_tilde, len, norm_x0p, cfg)?;
    if j.len() != jt.len() {
        return Err(Error::GridMismatch);
    }
    let closed = |model: &ManifoldModel, t: f64| {
        model
            .constant_curvature()
            .map(|k| constant_curvature_jacobi(k, len, t, Boundary::Ivp(norm_x0p)).map(|r| r.0))
            .transpose()
    };
    let (mut norm_margin, mut ratio_margin) = (f64::INFINITY, f64::INFINITY);
    let mut closed_err: Option<f64> = None;
    for k in 1..j.len() {
        let t = j.segment().samples()[k].t;
        let (n, nt) = (j.norm(k), jt.norm(k));
        let ratio = j.pairing(k) / (n * n);
        let ratio_tilde = jt.pairing(k) / (nt * nt);
        let closed_norm = closed(m, t)?;
        let closed_norm_tilde = closed(m_tilde, t)?;
        for (c, v) in [(closed_norm, n), (closed_norm_tilde, nt)] {
            if let Some(c) = c {
                closed_err = Some(closed_err.unwrap_or(0.0).max((c - v).abs()));
            }
        }
        norm_margin = norm_margin.min(n - nt);
        ratio_margin = ratio_margin.min(ratio - ratio_tilde);
        report.samples.push(RauchSample {
            t,
            norm: n,
            norm_tilde: nt,
            ratio,
            ratio_tilde,
            closed_norm,
            closed_norm_tilde,
        });
    }
    report.norm_margin = norm_margin;
    report.ratio_margin = ratio_margin;
    report.closed_form_error = closed_err;
    report.passed = Some(norm_margin >= -RAUCH_TOLERANCE && ratio_margin >= -RAUCH_TOLERANCE);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{make_model, ModelKind};

    #[test]
    fn flat_versus_sphere() {
        let cfg = GeometryConfig::default();
        let e = make_model(ModelKind::Euclidean { dim: 2 }).unwrap();
        let s = make_model(ModelKind::Sphere { dim: 2, radius: 1.0 }).unwrap();
        let r = rauch_compare(&e, &s, 1.0, 1.0, &cfg).unwrap();
        assert_eq!(r.passed, Some(true));
        assert!(r.closed_form_error.unwrap() < 1e-8);
        // reversed order violates the curvature hypothesis
        let bad = rauch_compare(&s, &e, 1.0, 1.0, &cfg).unwrap();
        assert!(!bad.precondition_ok && bad.passed.is_none());
    }

    #[test]
    fn identical_models_are_equal() {
        let cfg = GeometryConfig::default();
        let h = make_model(ModelKind::Hyperbolic { dim: 2, curvature: -1.0 }).unwrap();
        let r = rauch_compare(&h, &h, 1.5, 2.0, &cfg).unwrap();
        assert_eq!(r.passed, Some(true));
        assert!(r.norm_margin.abs() < 1e-9 && r.ratio_margin.abs() < 1e-9);
    }
}
