//! Jacobi fields, energy and the index form along geodesic segments.
//!
//! Fields are stored as components in the segment's parallel orthonormal frame,
//! so that `X' = ∇_{γ'} X` is the componentwise derivative and the Jacobi equation
//! becomes the linear system `c'' = -A(t) c` with `A_ij = <R(γ', e_j) γ', e_i>`.

mod rauch;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::GeometryConfig;
use crate::error::{Error, Result};
use crate::manifold::{GeodesicSegment, ManifoldModel, SegmentSample, TangentVector};
use crate::numerics::{simpson, trapezoid};

pub use rauch::{rauch_compare, RauchReport, RauchSample, RAUCH_TOLERANCE};

/// Smallest singular value of the endpoint matrix below which a boundary value
/// problem is treated as conjugate.
pub const CONJUGATE_GUARD: f64 = 1e-8;

/// A vector field along a segment, sampled on the segment grid in frame components.
#[derive(Debug, Clone)]
pub struct FieldAlongGeodesic {
    segment: Arc<GeodesicSegment>,
    components: Vec<DVector<f64>>,
    derivative_components: Vec<DVector<f64>>,
}

impl FieldAlongGeodesic {
    pub fn new(
        segment: Arc<GeodesicSegment>,
        components: Vec<DVector<f64>>,
        derivative_components: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let n = segment.sample_count();
        let dim = segment.model().dim();
        if components.len() != n
            || derivative_components.len() != n
            || components.iter().chain(&derivative_components).any(|c| c.len() != dim)
        {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            segment,
            components,
            derivative_components,
        })
    }

    /// Field with `c(t), c'(t) = f(t)` at every sample.
    pub fn from_fn(segment: Arc<GeodesicSegment>, f: impl Fn(f64) -> (DVector<f64>, DVector<f64>)) -> Result<Self> {
        let (c, d): (Vec<_>, Vec<_>) = segment.samples().iter().map(|s| f(s.t)).unzip();
        Self::new(segment, c, d)
    }

    pub fn segment(&self) -> &Arc<GeodesicSegment> {
        &self.segment
    }

    pub fn components(&self) -> &[DVector<f64>] {
        &self.components
    }

    pub fn derivative_components(&self) -> &[DVector<f64>] {
        &self.derivative_components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `X(t_k)` as a tangent vector.
    pub fn value(&self, k: usize) -> TangentVector {
        self.segment.vector_from_frame(k, &self.components[k])
    }

    /// `X'(t_k)` as a tangent vector.
    pub fn derivative(&self, k: usize) -> TangentVector {
        self.segment.vector_from_frame(k, &self.derivative_components[k])
    }

    /// `‖X(t_k)‖`.
    pub fn norm(&self, k: usize) -> f64 {
        self.components[k].norm()
    }

    /// `<X'(t_k), X(t_k)>`.
    pub fn pairing(&self, k: usize) -> f64 {
        self.derivative_components[k].dot(&self.components[k])
    }

    /// `<X'(ℓ), X(ℓ)>`.
    pub fn end_pairing(&self) -> f64 {
        self.pairing(self.len() - 1)
    }

    /// Largest `|(c_{k+1} - c_{k-1}) / 2h - c'_k|` over interior samples.
    pub fn derivative_consistency(&self) -> f64 {
        let h = self.segment.step();
        (1..self.len() - 1)
            .map(|k| ((&self.components[k + 1] - &self.components[k - 1]) / (2.0 * h) - &self.derivative_components[k]).amax())
            .fold(0.0, f64::max)
    }

    fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.segment, &other.segment) && self.len() == other.len()
    }

    /// `self + other` on a shared segment.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let c = self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect();
        let d = self
            .derivative_components
            .iter()
            .zip(&other.derivative_components)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(self.segment.clone(), c, d)
    }
}

/// RK4 for `C'' = -A(t) C` on the segment grid, with `A` interpolated linearly.
fn integrate(seg: &GeodesicSegment, c0: DMatrix<f64>, d0: DMatrix<f64>) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let n = seg.sample_count();
    let h = seg.step();
    let mut cs = Vec::with_capacity(n);
    let mut ds = Vec::with_capacity(n);
    let (mut c, mut d) = (c0, d0);
    cs.push(c.clone());
    ds.push(d.clone());
    for k in 0..n - 1 {
        let a0 = seg.curvature_matrix(k);
        let a1 = seg.curvature_matrix(k + 1);
        let am = (a0 + a1) * 0.5;
        let k1c = d.clone();
        let k1d = -(a0 * &c);
        let k2c = &d + &k1d * (h / 2.0);
        let k2d = -(&am * (&c + &k1c * (h / 2.0)));
        let k3c = &d + &k2d * (h / 2.0);
        let k3d = -(&am * (&c + &k2c * (h / 2.0)));
        let k4c = &d + &k3d * h;
        let k4d = -(a1 * (&c + &k3c * h));
        c += (k1c + k2c * 2.0 + k3c * 2.0 + k4c) * (h / 6.0);
        d += (k1d + k2d * 2.0 + k3d * 2.0 + k4d) * (h / 6.0);
        cs.push(c.clone());
        ds.push(d.clone());
    }
    (cs, ds)
}

fn column(m: &DMatrix<f64>) -> DVector<f64> {
    m.column(0).into_owned()
}

/// Jacobi field with `X(0) = x0`, `X'(0) = x0p` (both based at the segment start).
pub fn jacobi_ivp(
    seg: &Arc<GeodesicSegment>,
    x0: &TangentVector,
    x0p: &TangentVector,
    cfg: &GeometryConfig,
) -> Result<FieldAlongGeodesic> {
    cfg.validate()?;
    let c0 = seg.frame_components(0, x0)?;
    let d0 = seg.frame_components(0, x0p)?;
    ivp_components(seg, &c0, &d0)
}

/// [`jacobi_ivp`] with initial data given in frame components.
pub fn ivp_components(seg: &Arc<GeodesicSegment>, c0: &DVector<f64>, d0: &DVector<f64>) -> Result<FieldAlongGeodesic> {
    let dim = seg.model().dim();
    if c0.len() != dim || d0.len() != dim {
        return Err(Error::GridMismatch);
    }
    let (cs, ds) = integrate(seg, DMatrix::from_column_slice(dim, 1, c0.as_slice()), DMatrix::from_column_slice(dim, 1, d0.as_slice()));
    FieldAlongGeodesic::new(seg.clone(), cs.iter().map(column).collect(), ds.iter().map(column).collect())
}

/// Fundamental solutions `Φ(t)` (columns: `X(0) = 0`, `X'(0) = e_i`) along a segment.
#[derive(Debug, Clone)]
pub struct JacobiPropagator {
    segment: Arc<GeodesicSegment>,
    phi: Vec<DMatrix<f64>>,
    dphi: Vec<DMatrix<f64>>,
    smallest_singular_value: f64,
}

impl JacobiPropagator {
    pub fn new(seg: &Arc<GeodesicSegment>) -> Self {
        let n = seg.model().dim();
        let (phi, dphi) = integrate(seg, DMatrix::zeros(n, n), DMatrix::identity(n, n));
        let end = phi.last().expect("segment has samples").clone();
        let smallest_singular_value = end.singular_values().iter().cloned().fold(f64::INFINITY, f64::min);
        Self {
            segment: seg.clone(),
            phi,
            dphi,
            smallest_singular_value,
        }
    }

    pub fn segment(&self) -> &Arc<GeodesicSegment> {
        &self.segment
    }

    pub fn end_matrix(&self) -> &DMatrix<f64> {
        self.phi.last().expect("segment has samples")
    }

    pub fn end_derivative_matrix(&self) -> &DMatrix<f64> {
        self.dphi.last().expect("segment has samples")
    }

    pub fn smallest_singular_value(&self) -> f64 {
        self.smallest_singular_value
    }

    fn guard(&self) -> Result<()> {
        if !(self.smallest_singular_value >= CONJUGATE_GUARD) {
            return Err(Error::NearConjugate {
                smallest_singular_value: self.smallest_singular_value,
            });
        }
        Ok(())
    }

    /// `S = Φ'(ℓ) Φ(ℓ)^{-1}`, so that `<X'(ℓ), X(ℓ)> = vᵀ S v` for the field with `X(ℓ) = v`.
    pub fn end_form(&self) -> Result<DMatrix<f64>> {
        self.guard()?;
        let lu = self.end_matrix().transpose().lu();
        let st = lu
            .solve(&self.end_derivative_matrix().transpose())
            .ok_or(Error::NearConjugate {
                smallest_singular_value: self.smallest_singular_value,
            })?;
        Ok(st.transpose())
    }

    /// Jacobi field with `X(0) = 0` and frame components `v` at `ℓ`.
    pub fn bvp_components(&self, v: &DVector<f64>) -> Result<FieldAlongGeodesic> {
        self.guard()?;
        let a = self.end_matrix().clone().lu().solve(v).ok_or(Error::NearConjugate {
            smallest_singular_value: self.smallest_singular_value,
        })?;
        FieldAlongGeodesic::new(
            self.segment.clone(),
            self.phi.iter().map(|p| p * &a).collect(),
            self.dphi.iter().map(|p| p * &a).collect(),
        )
    }
}

/// Jacobi field with `X(0) = 0`, `X(ℓ) = v_end` (`v_end` based at the segment end).
pub fn jacobi_bvp(seg: &Arc<GeodesicSegment>, v_end: &TangentVector, cfg: &GeometryConfig) -> Result<FieldAlongGeodesic> {
    cfg.validate()?;
    let v = seg.frame_components(seg.sample_count() - 1, v_end)?;
    JacobiPropagator::new(seg).bvp_components(&v)
}

/// Boundary data for [`constant_curvature_jacobi`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `‖X'(0)‖`.
    Ivp(f64),
    /// `‖X(ℓ)‖`.
    Bvp(f64),
}

/// `sn_K(t)`: `sin(√K t)/√K`, `t` or `sinh(√-K t)/√-K`, with its derivative.
pub fn sn_cs(k: f64, t: f64) -> (f64, f64) {
    if k > 0.0 {
        let c = k.sqrt();
        ((c * t).sin() / c, (c * t).cos())
    } else if k < 0.0 {
        let c = (-k).sqrt();
        ((c * t).sinh() / c, (c * t).cosh())
    } else {
        (t, 1.0)
    }
}

/// Norm of an orthogonal Jacobi field with `X(0) = 0` in constant curvature `K`, and
/// its derivative, at parameter `t` of a segment of length `ℓ`.
pub fn constant_curvature_jacobi(k: f64, len: f64, t: f64, boundary: Boundary) -> Result<(f64, f64)> {
    if !(len > 0.0) {
        return Err(Error::InvalidParameter(format!("length {len} must be positive")));
    }
    let (sn, cs) = sn_cs(k, t);
    match boundary {
        Boundary::Ivp(s) => Ok((s * sn, s * cs)),
        Boundary::Bvp(m) => {
            if k > 0.0 && len >= std::f64::consts::PI / k.sqrt() {
                return Err(Error::NearConjugate {
                    smallest_singular_value: sn_cs(k, len).0.abs(),
                });
            }
            let end = sn_cs(k, len).0;
            Ok((m * sn / end, m * cs / end))
        }
    }
}

/// Length, energy and parameter span of a sampled curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLength {
    pub length: f64,
    pub energy: f64,
    pub duration: f64,
}

impl EnergyLength {
    /// `ℓ E - L² ≥ 0`, zero exactly for constant-speed curves.
    pub fn cauchy_schwarz_gap(&self) -> f64 {
        self.duration * self.energy - self.length * self.length
    }
}

/// `L = ∫ ‖α'‖` and `E = ∫ ‖α'‖²` by quadrature over the samples.
pub fn energy_and_length(model: &ManifoldModel, samples: &[SegmentSample], cfg: &GeometryConfig) -> Result<EnergyLength> {
    if samples.len() < cfg.quadrature_points {
        return Err(Error::TooFewSamples {
            needed: cfg.quadrature_points,
            got: samples.len(),
        });
    }
    let speed: Vec<f64> = samples.iter().map(|s| model.norm(&s.point, &s.velocity)).collect();
    let speed2: Vec<f64> = speed.iter().map(|s| s * s).collect();
    let duration = samples[samples.len() - 1].t - samples[0].t;
    let h = duration / (samples.len() - 1) as f64;
    let uniform = samples
        .windows(2)
        .all(|w| ((w[1].t - w[0].t) - h).abs() <= 1e-9 * h.abs().max(f64::MIN_POSITIVE));
    let (length, energy) = if uniform {
        (simpson(&speed, h), simpson(&speed2, h))
    } else {
        let quad = |v: &[f64]| {
            samples
                .windows(2)
                .zip(v.windows(2))
                .map(|(s, f)| 0.5 * (f[0] + f[1]) * (s[1].t - s[0].t))
                .sum::<f64>()
        };
        (quad(&speed), quad(&speed2))
    };
    Ok(EnergyLength {
        length,
        energy,
        duration,
    })
}

/// The index form `I(X, X) = ∫ (<X', X'> - <R(γ', X) γ', X>) dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexFormResult {
    pub value: f64,
    pub integrand_samples: Vec<f64>,
    /// `<X'(ℓ), X(ℓ)> - <X'(0), X(0)>`, equal to `value` for Jacobi fields.
    pub boundary_value: f64,
}

pub fn index_form(x: &FieldAlongGeodesic, cfg: &GeometryConfig) -> Result<IndexFormResult> {
    cfg.validate()?;
    let seg = x.segment();
    if x.len() != seg.sample_count() {
        return Err(Error::GridMismatch);
    }
    let integrand: Vec<f64> = (0..x.len())
        .map(|k| {
            let c = &x.components()[k];
            let d = &x.derivative_components()[k];
            d.dot(d) - (seg.curvature_matrix(k) * c).dot(c)
        })
        .collect();
    let value = simpson(&integrand, seg.step());
    Ok(IndexFormResult {
        value,
        boundary_value: x.end_pairing() - x.pairing(0),
        integrand_samples: integrand,
    })
}

/// Trapezoid value of the index form, for quadrature error estimates.
pub fn index_form_trapezoid(result: &IndexFormResult, step: f64) -> f64 {
    trapezoid(&result.integrand_samples, step)
}

/// `(1/ℓ + ℓ K₀ / 3) ‖v‖²`.
pub fn index_form_upper_bound(seg: &GeodesicSegment, v: &TangentVector, model: &ManifoldModel) -> Result<f64> {
    let v = model.align(seg.end(), v)?;
    let len = seg.length();
    Ok((1.0 / len + len * model.curvature_bound() / 3.0) * model.tangent_norm(&v).powi(2))
}

/// The comparison field `Z(t) = (t/ℓ) P(t)` with `P` parallel and `P(ℓ) = v`.
pub fn z_field(seg: &Arc<GeodesicSegment>, v_end: &TangentVector) -> Result<FieldAlongGeodesic> {
    let v = seg.frame_components(seg.sample_count() - 1, v_end)?;
    let len = seg.length();
    FieldAlongGeodesic::from_fn(seg.clone(), |t| (&v * (t / len), &v / len))
}

/// Largest `|c''_k + A_k c_k|` over interior samples, with `c''` from central
/// differences of the derivative components.
pub fn jacobi_residual(x: &FieldAlongGeodesic) -> f64 {
    let seg = x.segment();
    let h = seg.step();
    let d = x.derivative_components();
    (1..x.len() - 1)
        .map(|k| ((&d[k + 1] - &d[k - 1]) / (2.0 * h) + seg.curvature_matrix(k) * &x.components()[k]).amax())
        .fold(0.0, f64::max)
}

/// Splits `X` into its `γ'` part (frame coordinate 0) and the orthogonal rest.
pub fn tangent_normal_decompose(x: &FieldAlongGeodesic) -> Result<(FieldAlongGeodesic, FieldAlongGeodesic)> {
    let split = |v: &DVector<f64>| {
        let mut tan = DVector::zeros(v.len());
        tan[0] = v[0];
        let mut perp = v.clone();
        perp[0] = 0.0;
        (tan, perp)
    };
    let (ct, cp): (Vec<_>, Vec<_>) = x.components().iter().map(split).unzip();
    let (dt, dp): (Vec<_>, Vec<_>) = x.derivative_components().iter().map(split).unzip();
    Ok((
        FieldAlongGeodesic::new(x.segment().clone(), ct, dt)?,
        FieldAlongGeodesic::new(x.segment().clone(), cp, dp)?,
    ))
}

/// `ℓ (E(h) - 2E(0) + E(-h)) / h²` for the variation through minimizing geodesics from
/// the segment start to `σ(s) = exp_x(s v)`, each reparameterized on `[0, ℓ]`.
/// Here `x` is the segment end and `h = fd_step^{1/2}`.
pub fn second_variation_fd(
    seg: &GeodesicSegment,
    v: &TangentVector,
    model: &ManifoldModel,
    cfg: &GeometryConfig,
) -> Result<f64> {
    cfg.validate()?;
    let len = seg.length();
    let x = seg.end();
    let v = model.align(x, v)?;
    let h = cfg.second_difference_step();
    let limit = model.safe_radius().min(model.log_radius());
    let energy = |s: f64| -> Result<f64> {
        let target = model.exp_map(&v.scaled(s))?;
        let alpha = GeodesicSegment::between(model, seg.start(), &target, cfg)?;
        if alpha.length() >= limit {
            return Err(Error::OutsideSafeRadius {
                distance: alpha.length(),
                radius: limit,
            });
        }
        let scale = alpha.length() / len;
        let reparam: Vec<SegmentSample> = alpha
            .samples()
            .iter()
            .map(|p| SegmentSample {
                t: p.t / scale,
                point: p.point.clone(),
                velocity: &p.velocity * scale,
            })
            .collect();
        Ok(energy_and_length(model, &reparam, cfg)?.energy)
    };
    // the variation must stay inside the safe ball for |s| <= 2h
    for s in [-2.0 * h, 2.0 * h] {
        let far = model.exp_map(&v.scaled(s))?;
        let d = model.distance(seg.start(), &far)?;
        if d >= limit {
            return Err(Error::OutsideSafeRadius { distance: d, radius: limit });
        }
    }
    let e0 = energy_and_length(model, seg.samples(), cfg)?.energy;
    let ep = energy(h)?;
    let em = energy(-h)?;
    Ok(len * (ep - 2.0 * e0 + em) / (h * h))
}
