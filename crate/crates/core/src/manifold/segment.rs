//! Unit-speed geodesic segments with a parallel orthonormal frame.

use nalgebra::{DMatrix, DVector};

use super::{Geometry, ManifoldModel, Point, TangentVector};
use crate::config::GeometryConfig;
use crate::error::{Error, Result};

/// One sample of a curve: parameter, point and velocity components.
#[derive(Debug, Clone)]
pub struct SegmentSample {
    pub t: f64,
    pub point: Point,
    pub velocity: DVector<f64>,
}

/// Ambient data of a geodesic in a space form.
#[derive(Debug, Clone)]
struct AmbientGeodesic {
    start: DVector<f64>,
    direction: DVector<f64>,
    frame: Vec<DVector<f64>>,
}

/// A unit-speed geodesic `γ: [0, ℓ] → M` sampled on a uniform grid, with a parallel
/// orthonormal frame `e_1 = γ', e_2, .., e_n` and the curvature operator matrices
/// `A(t)_ij = <R(γ', e_j) γ', e_i>` at every sample.
#[derive(Debug, Clone)]
pub struct GeodesicSegment {
    model: ManifoldModel,
    length: f64,
    step: f64,
    samples: Vec<SegmentSample>,
    frames: Vec<Vec<DVector<f64>>>,
    curvature: Vec<DMatrix<f64>>,
    ambient: Option<AmbientGeodesic>,
}

impl GeodesicSegment {
    /// Minimizing segment from `x` to `y`.
    pub fn between(model: &ManifoldModel, x: &Point, y: &Point, cfg: &GeometryConfig) -> Result<Self> {
        let v = model.log_map(x, y)?;
        Self::from_log(model, x, y, &v, cfg)
    }

    /// [`between`](Self::between) with `v = log_x(y)` already known.
    pub(crate) fn from_log(model: &ManifoldModel, x: &Point, y: &Point, v: &TangentVector, cfg: &GeometryConfig) -> Result<Self> {
        cfg.validate()?;
        let len = model.tangent_norm(v);
        if len <= cfg.tolerance {
            return Err(Error::DegenerateSegment);
        }
        let unit = v.scaled(1.0 / len);
        Self::build(model, x, &unit, len, Some(y), cfg)
    }

    /// Segment of length `len` from `x` with initial velocity `unit` (normalized here).
    pub fn from_direction(
        model: &ManifoldModel,
        unit: &TangentVector,
        len: f64,
        cfg: &GeometryConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::DegenerateSegment);
        }
        let n = model.tangent_norm(unit);
        if n == 0.0 {
            return Err(Error::InvalidParameter("zero direction".into()));
        }
        let x = unit.base.clone();
        Self::build(model, &x, &unit.scaled(1.0 / n), len, None, cfg)
    }

    fn build(
        model: &ManifoldModel,
        x: &Point,
        unit: &TangentVector,
        len: f64,
        end: Option<&Point>,
        cfg: &GeometryConfig,
    ) -> Result<Self> {
        let unit = model.align(x, unit)?;
        let intervals = cfg.intervals_for(len);
        let step = len / intervals as f64;
        let frame0 = model.frame_with_first(x, &unit.components);
        let mut samples = Vec::with_capacity(intervals + 1);
        let mut frames = Vec::with_capacity(intervals + 1);
        let mut ambient = None;
        match &model.geometry {
            Geometry::Euclidean | Geometry::Torus(_) => {
                for k in 0..=intervals {
                    let t = k as f64 * step;
                    let mut c = &x.coords + &unit.components * t;
                    model.wrap(&mut c);
                    samples.push(SegmentSample {
                        t,
                        point: Point::new(x.chart, c),
                        velocity: unit.components.clone(),
                    });
                    frames.push(frame0.clone());
                }
            }
            Geometry::SpaceForm(sf) => {
                let p = sf.embed(x);
                let u = sf.push(x, &unit.components);
                let e: Vec<DVector<f64>> = frame0.iter().map(|f| sf.push(x, f)).collect();
                for k in 0..=intervals {
                    let t = k as f64 * step;
                    let q = sf.project(&sf.geodesic_point(&p, &u, t));
                    let point = if k == 0 { x.clone() } else { sf.chart_point(&q) };
                    let velocity = sf.pull(&point, &sf.geodesic_velocity(&p, &u, t));
                    let frame = e.iter().map(|ei| sf.pull(&point, &sf.transport(&p, &u, ei, t))).collect();
                    samples.push(SegmentSample { t, point, velocity });
                    frames.push(frame);
                }
                ambient = Some(AmbientGeodesic {
                    start: p,
                    direction: u,
                    frame: e,
                });
            }
            Geometry::Chart(_) => {
                let mut pos = x.coords.clone();
                let mut vel = unit.components.clone();
                let mut frame = frame0.clone();
                samples.push(SegmentSample {
                    t: 0.0,
                    point: x.clone(),
                    velocity: vel.clone(),
                });
                frames.push(frame.clone());
                for k in 1..=intervals {
                    (pos, vel, frame) = rk4_frame_step(model, x.chart, &pos, &vel, &frame, step)?;
                    samples.push(SegmentSample {
                        t: k as f64 * step,
                        point: Point::new(x.chart, pos.clone()),
                        velocity: vel.clone(),
                    });
                    frames.push(frame.clone());
                }
            }
        }
        if let Some(y) = end {
            let last = samples.last_mut().expect("segment has samples");
            if model.same_point(y, &last.point, 1e-6) {
                let v = model.tangent_to_chart(&TangentVector::new(last.point.clone(), last.velocity.clone()), y.chart)?;
                let f: Result<Vec<DVector<f64>>> = frames[intervals]
                    .iter()
                    .map(|e| {
                        model
                            .tangent_to_chart(&TangentVector::new(last.point.clone(), e.clone()), y.chart)
                            .map(|t| t.components)
                    })
                    .collect();
                frames[intervals] = f?;
                last.velocity = v.components;
                last.point = y.clone();
            }
        }
        let curvature = samples
            .iter()
            .zip(&frames)
            .map(|(s, frame)| curvature_matrix(model, &s.point, &s.velocity, frame))
            .collect();
        Ok(Self {
            model: model.clone(),
            length: len,
            step,
            samples,
            frames,
            curvature,
            ambient,
        })
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Grid spacing.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn samples(&self) -> &[SegmentSample] {
        &self.samples
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    pub fn start(&self) -> &Point {
        &self.samples[0].point
    }

    pub fn end(&self) -> &Point {
        &self.samples[self.samples.len() - 1].point
    }

    pub fn unit_velocity(&self) -> TangentVector {
        TangentVector::new(self.start().clone(), self.samples[0].velocity.clone())
    }

    pub fn end_velocity(&self) -> TangentVector {
        let last = &self.samples[self.samples.len() - 1];
        TangentVector::new(last.point.clone(), last.velocity.clone())
    }

    /// Frame at sample `k` in chart components.
    pub fn frame(&self, k: usize) -> &[DVector<f64>] {
        &self.frames[k]
    }

    /// Curvature operator matrix `A(t_k)` in frame components.
    pub fn curvature_matrix(&self, k: usize) -> &DMatrix<f64> {
        &self.curvature[k]
    }

    /// Frame components `<v, e_i(t_k)>` of a vector based at sample `k`.
    pub fn frame_components(&self, k: usize, v: &TangentVector) -> Result<DVector<f64>> {
        let base = &self.samples[k].point;
        let v = self.model.align(base, v)?;
        Ok(DVector::from_iterator(
            self.frames[k].len(),
            self.frames[k].iter().map(|e| self.model.inner(base, &v.components, e)),
        ))
    }

    /// Tangent vector `Σ c_i e_i(t_k)`.
    pub fn vector_from_frame(&self, k: usize, c: &DVector<f64>) -> TangentVector {
        let mut comps = DVector::zeros(self.model.dim());
        for (ci, e) in c.iter().zip(&self.frames[k]) {
            comps += e * *ci;
        }
        TangentVector::new(self.samples[k].point.clone(), comps)
    }

    /// Point and frame at an arbitrary parameter `t ∈ [0, ℓ]`.
    pub fn frame_at(&self, t: f64) -> Result<(Point, DVector<f64>, Vec<DVector<f64>>)> {
        if !(t >= -1e-12 && t <= self.length + 1e-12) {
            return Err(Error::InvalidParameter(format!("t = {t} outside [0, {}]", self.length)));
        }
        let t = t.clamp(0.0, self.length);
        let last = self.samples.len() - 1;
        let pos = t / self.step;
        let k = (pos.round() as usize).min(last);
        if (pos - k as f64).abs() < 1e-9 {
            let s = &self.samples[k];
            return Ok((s.point.clone(), s.velocity.clone(), self.frames[k].clone()));
        }
        let k = (pos.floor() as usize).min(last - 1);
        let tau = t - self.samples[k].t;
        match (&self.model.geometry, &self.ambient) {
            (Geometry::SpaceForm(sf), Some(a)) => {
                let q = sf.project(&sf.geodesic_point(&a.start, &a.direction, t));
                let point = sf.chart_point(&q);
                let vel = sf.pull(&point, &sf.geodesic_velocity(&a.start, &a.direction, t));
                let frame = a
                    .frame
                    .iter()
                    .map(|e| sf.pull(&point, &sf.transport(&a.start, &a.direction, e, t)))
                    .collect();
                Ok((point, vel, frame))
            }
            (Geometry::Euclidean | Geometry::Torus(_), _) => {
                let s = &self.samples[0];
                let mut c = &s.point.coords + &s.velocity * t;
                self.model.wrap(&mut c);
                Ok((Point::new(s.point.chart, c), s.velocity.clone(), self.frames[0].clone()))
            }
            _ => {
                let s = &self.samples[k];
                let (p, v, f) = rk4_frame_step(&self.model, s.point.chart, &s.point.coords, &s.velocity, &self.frames[k], tau)?;
                Ok((Point::new(s.point.chart, p), v, f))
            }
        }
    }

    /// Parallel transport of `v` (based at the start) to parameter `t`.
    pub fn parallel_transport(&self, v: &TangentVector, t: f64) -> Result<TangentVector> {
        let c = self.frame_components(0, v)?;
        let (point, _, frame) = self.frame_at(t)?;
        let mut comps = DVector::zeros(self.model.dim());
        for (ci, e) in c.iter().zip(&frame) {
            comps += e * *ci;
        }
        Ok(TangentVector::new(point, comps))
    }

    /// Largest `|‖γ'(t_k)‖ - 1|`.
    pub fn speed_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (self.model.norm(&s.point, &s.velocity) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest orthonormality defect of the frame over all samples.
    pub fn frame_defect(&self) -> f64 {
        self.samples
            .iter()
            .zip(&self.frames)
            .map(|(s, f)| self.model.frame_defect(&s.point, f))
            .fold(0.0, f64::max)
    }
}

/// `A_ij = <R(γ', e_j) γ', e_i>` at one sample.
fn curvature_matrix(model: &ManifoldModel, x: &Point, vel: &DVector<f64>, frame: &[DVector<f64>]) -> DMatrix<f64> {
    let n = frame.len();
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        let r = model.curvature_apply(x, vel, &frame[j], vel);
        for i in 0..n {
            a[(i, j)] = model.inner(x, &r, &frame[i]);
        }
    }
    // symmetric up to discretization noise; symmetrize
    (&a + a.transpose()) * 0.5
}

type FrameState = (DVector<f64>, DVector<f64>, Vec<DVector<f64>>);

/// One RK4 step of the geodesic equation coupled with parallel transport of a frame.
fn rk4_frame_step(
    model: &ManifoldModel,
    chart: usize,
    x: &DVector<f64>,
    v: &DVector<f64>,
    frame: &[DVector<f64>],
    h: f64,
) -> Result<FrameState> {
    let axpy = |a: &[DVector<f64>], b: &[DVector<f64>], s: f64| -> Vec<DVector<f64>> {
        a.iter().zip(b).map(|(ai, bi)| ai + bi * s).collect()
    };
    let (a1, f1) = model.geodesic_rhs(x, chart, v, frame);
    let x2 = x + v * (h / 2.0);
    let v2 = v + &a1 * (h / 2.0);
    let fr2 = axpy(frame, &f1, h / 2.0);
    let (a2, f2) = model.geodesic_rhs(&x2, chart, &v2, &fr2);
    let x3 = x + &v2 * (h / 2.0);
    let v3 = v + &a2 * (h / 2.0);
    let fr3 = axpy(frame, &f2, h / 2.0);
    let (a3, f3) = model.geodesic_rhs(&x3, chart, &v3, &fr3);
    let x4 = x + &v3 * h;
    let v4 = v + &a3 * h;
    let fr4 = axpy(frame, &f3, h);
    let (a4, f4) = model.geodesic_rhs(&x4, chart, &v4, &fr4);
    let xn = x + (v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (h / 6.0);
    let vn = v + (&a1 + &a2 * 2.0 + &a3 * 2.0 + &a4) * (h / 6.0);
    let fnew = (0..frame.len())
        .map(|i| &frame[i] + (&f1[i] + &f2[i] * 2.0 + &f3[i] * 2.0 + &f4[i]) * (h / 6.0))
        .collect();
    if !model.in_domain(&Point::new(chart, xn.clone())) {
        return Err(Error::LeftChartDomain);
    }
    Ok((xn, vn, fnew))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{make_model, ModelKind};
    use std::f64::consts::PI;

    #[test]
    fn sphere_meridian_segment() {
        let m = make_model(ModelKind::Sphere { dim: 2, radius: 1.0 }).unwrap();
        let cfg = GeometryConfig::default();
        let north = m.point_from_ambient(&[0.0, 0.0, 1.0]).unwrap();
        let east = m.point_from_ambient(&[1.0, 0.0, 0.0]).unwrap();
        let seg = GeodesicSegment::between(&m, &north, &east, &cfg).unwrap();
        assert!((seg.length() - PI / 2.0).abs() < 1e-12);
        assert!(seg.frame_defect() < 1e-9);
        assert!(seg.speed_defect() < 1e-9);
        assert_eq!(seg.end(), &east);
        // curvature operator in the frame is diag(0, 1)
        let a = seg.curvature_matrix(seg.sample_count() / 2);
        assert!((a[(0, 0)]).abs() < 1e-12 && (a[(1, 1)] - 1.0).abs() < 1e-12 && a[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn coincident_points_rejected() {
        let m = make_model(ModelKind::Euclidean { dim: 2 }).unwrap();
        let x = m.point(&[0.0, 0.0]).unwrap();
        let cfg = GeometryConfig::default();
        assert_eq!(GeodesicSegment::between(&m, &x, &x, &cfg).unwrap_err(), Error::DegenerateSegment);
    }

    #[test]
    fn euclidean_frame_constant_and_transport_trivial() {
        let m = make_model(ModelKind::Euclidean { dim: 3 }).unwrap();
        let cfg = GeometryConfig::default();
        let x = m.point(&[0.0, 0.0, 0.0]).unwrap();
        let y = m.point(&[1.0, 2.0, 2.0]).unwrap();
        let seg = GeodesicSegment::between(&m, &x, &y, &cfg).unwrap();
        assert!((seg.length() - 3.0).abs() < 1e-14);
        let v = m.tangent(&x, &[0.3, -0.1, 0.7]);
        let p = seg.parallel_transport(&v, 1.234).unwrap();
        assert!((p.components - &v.components).amax() < 1e-14);
        assert!((p.base.coords - DVector::from_vec(vec![1.234 / 3.0, 2.468 / 3.0, 2.468 / 3.0])).amax() < 1e-14);
    }

    #[test]
    fn transport_of_velocity_is_velocity() {
        let m = make_model(ModelKind::Sphere { dim: 2, radius: 1.0 }).unwrap();
        let cfg = GeometryConfig::default();
        let x = m.point(&[0.1, 0.2]).unwrap();
        let y = m.point(&[-0.3, 0.4]).unwrap();
        let seg = GeodesicSegment::between(&m, &x, &y, &cfg).unwrap();
        let t = 0.37 * seg.length();
        let p = seg.parallel_transport(&seg.unit_velocity(), t).unwrap();
        let (_, vel, _) = seg.frame_at(t).unwrap();
        assert!((p.components - vel).amax() < 1e-12);
    }
}
