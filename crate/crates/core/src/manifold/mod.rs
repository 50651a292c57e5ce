//! Finite-dimensional Riemannian manifolds given in charts.
//!
//! Four model spaces come with closed-form exponential and logarithm maps
//! (euclidean space, round spheres, hyperbolic spaces and flat tori). Any other
//! metric can be supplied as a chart callback, in which case Christoffel
//! symbols and curvature are obtained by finite differences of the metric and
//! geodesics are integrated with RK4.
//!
//! Curvature convention: `curvature_apply(x, u, v, w)` returns the operator
//! `R(u, v) w` for which the Jacobi equation reads `X'' + R(γ', X) γ' = 0`, so
//! that on a space of constant curvature `K` one has
//! `R(u, v) w = K (<u, w> v - <v, w> u)`. Sectional curvature is
//! `<R(u, v) u, v> / |u ∧ v|^2`, which equals `+1` on the unit sphere.

mod chart;
mod correction;
mod segment;
mod space_form;
pub mod spec;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::GeometryConfig;
use crate::error::{Error, Result};

pub use chart::{ChartDomain, ChartMetric, ChristoffelFn, MetricFn};
pub use correction::{chart_hessian_correction, HessianCorrection};
pub use segment::{GeodesicSegment, SegmentSample};
use space_form::SpaceForm;

/// A point of a manifold, given by its coordinates in the chart `chart`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub chart: usize,
    pub coords: DVector<f64>,
}

impl Point {
    pub fn new(chart: usize, coords: DVector<f64>) -> Self {
        Self { chart, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// A tangent vector with its chart components at `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: Point,
    pub components: DVector<f64>,
}

impl TangentVector {
    pub fn new(base: Point, components: DVector<f64>) -> Self {
        Self { base, components }
    }

    pub fn zero(base: Point) -> Self {
        let n = base.dim();
        Self {
            base,
            components: DVector::zeros(n),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            base: self.base.clone(),
            components: &self.components * s,
        }
    }
}

/// Christoffel symbols `Γ^k_ij` at a point, stored as `data[k][i][j]`.
#[derive(Debug, Clone)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[(k * self.dim + i) * self.dim + j] = v;
    }

    /// `Γ^k_ij u^i v^j`.
    pub fn contract(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        DVector::from_fn(n, |k, _| {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += self.get(k, i, j) * u[i] * v[j];
                }
            }
            acc
        })
    }

    /// Largest asymmetry `|Γ^k_ij - Γ^k_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        worst
    }
}

/// Which manifold to build.
#[derive(Clone)]
pub enum ModelKind {
    Euclidean { dim: usize },
    Sphere { dim: usize, radius: f64 },
    /// Hyperbolic space of constant curvature `curvature < 0`.
    Hyperbolic { dim: usize, curvature: f64 },
    FlatTorus { periods: Vec<f64> },
    ChartMetric(ChartMetric),
}

#[derive(Clone)]
enum Geometry {
    Euclidean,
    Torus(Vec<f64>),
    SpaceForm(SpaceForm),
    Chart(Arc<ChartMetric>),
}

/// A Riemannian manifold together with its geometric constants.
#[derive(Clone)]
pub struct ManifoldModel {
    dim: usize,
    geometry: Geometry,
    curvature_bound: f64,
    injectivity_radius: f64,
    convexity_radius: f64,
    label: String,
    config: GeometryConfig,
}

impl fmt::Debug for ManifoldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldModel")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("curvature_bound", &self.curvature_bound)
            .field("injectivity_radius", &self.injectivity_radius)
            .field("convexity_radius", &self.convexity_radius)
            .finish()
    }
}

/// Builds a model manifold, see [`ManifoldModel::new`].
pub fn make_model(kind: ModelKind) -> Result<ManifoldModel> {
    ManifoldModel::new(kind)
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl ManifoldModel {
    pub fn new(kind: ModelKind) -> Result<Self> {
        let check_dim = |dim: usize| {
            if dim == 0 {
                Err(Error::InvalidParameter("dimension must be at least 1".into()))
            } else {
                Ok(())
            }
        };
        let model = match kind {
            ModelKind::Euclidean { dim } => {
                check_dim(dim)?;
                Self::assemble(dim, Geometry::Euclidean, 0.0, f64::INFINITY, f64::INFINITY, format!("euclidean({dim})"))
            }
            ModelKind::Sphere { dim, radius } => {
                check_dim(dim)?;
                if !positive(radius) {
                    return Err(Error::InvalidParameter(format!("sphere radius {radius} must be positive")));
                }
                Self::assemble(
                    dim,
                    Geometry::SpaceForm(SpaceForm::new(1.0 / (radius * radius))),
                    1.0 / (radius * radius),
                    PI * radius,
                    PI * radius / 2.0,
                    format!("sphere({dim}, {radius})"),
                )
            }
            ModelKind::Hyperbolic { dim, curvature } => {
                check_dim(dim)?;
                if !(curvature.is_finite() && curvature < 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "hyperbolic curvature {curvature} must be negative"
                    )));
                }
                Self::assemble(
                    dim,
                    Geometry::SpaceForm(SpaceForm::new(curvature)),
                    -curvature,
                    f64::INFINITY,
                    f64::INFINITY,
                    format!("hyperbolic({dim}, {curvature})"),
                )
            }
            ModelKind::FlatTorus { periods } => {
                check_dim(periods.len())?;
                if !periods.iter().all(|p| positive(*p)) {
                    return Err(Error::InvalidParameter("torus periods must be positive".into()));
                }
                let shortest = periods.iter().cloned().fold(f64::INFINITY, f64::min);
                let dim = periods.len();
                let label = format!("flat_torus({periods:?})");
                Self::assemble(dim, Geometry::Torus(periods), 0.0, shortest / 2.0, shortest / 4.0, label)
            }
            ModelKind::ChartMetric(chart) => {
                check_dim(chart.dim())?;
                let k0 = chart.curvature_bound().ok_or_else(|| {
                    Error::InvalidParameter("chart metric requires a curvature bound".into())
                })?;
                if !(k0.is_finite() && k0 >= 0.0) {
                    return Err(Error::InvalidParameter("curvature bound must be nonnegative".into()));
                }
                let inj = chart.injectivity_radius().unwrap_or(f64::INFINITY);
                let conv = chart.convexity_radius().unwrap_or(f64::INFINITY);
                if !(inj > 0.0 && conv > 0.0) {
                    return Err(Error::InvalidParameter("radii must be positive".into()));
                }
                let dim = chart.dim();
                let label = format!("chart_metric({})", chart.name());
                Self::assemble(dim, Geometry::Chart(Arc::new(chart)), k0, inj, conv, label)
            }
        };
        Ok(model)
    }

    fn assemble(dim: usize, geometry: Geometry, k0: f64, inj: f64, conv: f64, label: String) -> Self {
        Self {
            dim,
            geometry,
            curvature_bound: k0,
            injectivity_radius: inj,
            convexity_radius: conv,
            label,
            config: GeometryConfig::default(),
        }
    }

    /// Replaces the numerical configuration used by `exp_map`/`log_map` on chart models.
    pub fn with_config(mut self, config: GeometryConfig) -> Self {
        self.config = config;
        self
    }

    pub fn config(&self) -> &GeometryConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `K₀` with `|K| <= K₀`.
    pub fn curvature_bound(&self) -> f64 {
        self.curvature_bound
    }

    pub fn injectivity_radius(&self) -> f64 {
        self.injectivity_radius
    }

    pub fn convexity_radius(&self) -> f64 {
        self.convexity_radius
    }

    /// `min{i(M), c(M), π / (2 √K₀)}`.
    pub fn safe_radius(&self) -> f64 {
        let curv = if self.curvature_bound > 0.0 {
            PI / (2.0 * self.curvature_bound.sqrt())
        } else {
            f64::INFINITY
        };
        self.injectivity_radius.min(self.convexity_radius).min(curv)
    }

    /// Radius below which minimizing geodesics are unique and `log_map` is defined.
    ///
    /// Closed-form models only need `d < i(M)`; chart models additionally need `d < c(M)`.
    pub fn log_radius(&self) -> f64 {
        match self.geometry {
            Geometry::Chart(_) => self.injectivity_radius.min(self.convexity_radius),
            _ => self.injectivity_radius,
        }
    }

    /// Radius used for bumps: `0.9 * safe_radius`, capped at 1.
    pub fn bumpability_radius(&self) -> f64 {
        (0.9 * self.safe_radius()).min(1.0)
    }

    /// The curvature when it is constant.
    pub fn constant_curvature(&self) -> Option<f64> {
        match &self.geometry {
            Geometry::Euclidean | Geometry::Torus(_) => Some(0.0),
            Geometry::SpaceForm(sf) => Some(sf.curvature()),
            Geometry::Chart(_) => None,
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self.geometry, Geometry::Chart(_))
    }

    pub fn chart_metric(&self) -> Option<&ChartMetric> {
        match &self.geometry {
            Geometry::Chart(c) => Some(c),
            _ => None,
        }
    }

    pub fn chart_count(&self) -> usize {
        match &self.geometry {
            Geometry::SpaceForm(sf) if sf.curvature() > 0.0 => 2,
            _ => 1,
        }
    }

    /// Point in chart 0. Torus coordinates are reduced modulo the periods.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        self.point_in_chart(0, coords)
    }

    pub fn point_in_chart(&self, chart: usize, coords: &[f64]) -> Result<Point> {
        if coords.len() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "expected {} coordinates, got {}",
                self.dim,
                coords.len()
            )));
        }
        if chart >= self.chart_count() {
            return Err(Error::InvalidParameter(format!("unknown chart {chart}")));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinates".into()));
        }
        let mut p = Point::new(chart, DVector::from_column_slice(coords));
        if let Geometry::Torus(periods) = &self.geometry {
            wrap_torus(&mut p.coords, periods);
        }
        if let Geometry::Chart(c) = &self.geometry {
            if !c.domain().contains(&p.coords) {
                return Err(Error::LeftChartDomain);
            }
        }
        Ok(p)
    }

    /// Point from ambient coordinates (sphere: euclidean `R^{n+1}`, hyperbolic: hyperboloid
    /// in Minkowski space with the time coordinate last). Other models take chart coordinates.
    pub fn point_from_ambient(&self, ambient: &[f64]) -> Result<Point> {
        match &self.geometry {
            Geometry::SpaceForm(sf) => {
                if ambient.len() != self.dim + 1 {
                    return Err(Error::InvalidParameter("ambient vector has wrong length".into()));
                }
                let x = sf.project(&DVector::from_column_slice(ambient));
                Ok(sf.chart_point(&x))
            }
            _ => self.point(ambient),
        }
    }

    /// Ambient coordinates of `p` for space forms, chart coordinates otherwise.
    pub fn ambient(&self, p: &Point) -> DVector<f64> {
        match &self.geometry {
            Geometry::SpaceForm(sf) => sf.embed(p),
            _ => p.coords.clone(),
        }
    }

    /// Ambient components of a tangent vector (space forms), chart components otherwise.
    pub fn ambient_tangent(&self, v: &TangentVector) -> DVector<f64> {
        match &self.geometry {
            Geometry::SpaceForm(sf) => sf.push(&v.base, &v.components),
            _ => v.components.clone(),
        }
    }

    /// Tangent vector at `base` from ambient components (space forms) or chart components.
    pub fn tangent_from_ambient(&self, base: &Point, ambient: &[f64]) -> TangentVector {
        let a = DVector::from_column_slice(ambient);
        match &self.geometry {
            Geometry::SpaceForm(sf) => TangentVector::new(base.clone(), sf.pull(base, &a)),
            _ => TangentVector::new(base.clone(), a),
        }
    }

    /// A canonical base point: the origin, the north pole, or the chart domain center.
    pub fn reference_point(&self) -> Point {
        match &self.geometry {
            Geometry::Chart(c) => Point::new(0, c.domain().center()),
            _ => Point::new(0, DVector::zeros(self.dim)),
        }
    }

    pub fn tangent(&self, base: &Point, components: &[f64]) -> TangentVector {
        TangentVector::new(base.clone(), DVector::from_column_slice(components))
    }

    pub fn in_domain(&self, p: &Point) -> bool {
        match &self.geometry {
            Geometry::Chart(c) => c.domain().contains(&p.coords),
            _ => p.coords.iter().all(|c| c.is_finite()),
        }
    }

    /// Metric matrix `g(x)` in chart coordinates.
    pub fn metric(&self, x: &Point) -> DMatrix<f64> {
        match &self.geometry {
            Geometry::Euclidean | Geometry::Torus(_) => DMatrix::identity(self.dim, self.dim),
            Geometry::SpaceForm(sf) => sf.metric(x),
            Geometry::Chart(c) => c.metric(&x.coords),
        }
    }

    pub fn inner(&self, x: &Point, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match &self.geometry {
            Geometry::Euclidean | Geometry::Torus(_) => a.dot(b),
            _ => (self.metric(x) * b).dot(a),
        }
    }

    pub fn norm(&self, x: &Point, a: &DVector<f64>) -> f64 {
        self.inner(x, a, a).max(0.0).sqrt()
    }

    pub fn tangent_inner(&self, u: &TangentVector, v: &TangentVector) -> Result<f64> {
        let v = self.align(&u.base, v)?;
        Ok(self.inner(&u.base, &u.components, &v.components))
    }

    pub fn tangent_norm(&self, v: &TangentVector) -> f64 {
        self.norm(&v.base, &v.components)
    }

    /// Christoffel symbols at `x` (analytic on closed-form models).
    pub fn christoffel(&self, x: &Point) -> Christoffel {
        match &self.geometry {
            Geometry::Euclidean | Geometry::Torus(_) => Christoffel::zeros(self.dim),
            Geometry::SpaceForm(sf) => sf.christoffel(x),
            Geometry::Chart(c) => c.christoffel(&x.coords),
        }
    }

    /// `R(u, v) w` in chart components at `x`.
    pub fn curvature_apply(
        &self,
        x: &Point,
        u: &DVector<f64>,
        v: &DVector<f64>,
        w: &DVector<f64>,
    ) -> DVector<f64> {
        match &self.geometry {
            Geometry::Euclidean | Geometry::Torus(_) => DVector::zeros(self.dim),
            Geometry::SpaceForm(sf) => {
                let k = sf.curvature();
                let g = self.metric(x);
                let uw = (&g * w).dot(u);
                let vw = (&g * w).dot(v);
                (v * uw - u * vw) * k
            }
            Geometry::Chart(c) => c.curvature_apply(&x.coords, u, v, w),
        }
    }

    /// Sectional curvature of the plane spanned by `u` and `v`.
    pub fn sectional_curvature(&self, u: &TangentVector, v: &TangentVector) -> Result<f64> {
        let v = self.align(&u.base, v)?;
        let x = &u.base;
        let uu = self.inner(x, &u.components, &u.components);
        let vv = self.inner(x, &v.components, &v.components);
        let uv = self.inner(x, &u.components, &v.components);
        let wedge = uu * vv - uv * uv;
        if !(wedge > 1e-12 * uu * vv) || wedge <= 0.0 {
            return Err(Error::DegeneratePlane(wedge));
        }
        let r = self.curvature_apply(x, &u.components, &v.components, &u.components);
        Ok(self.inner(x, &r, &v.components) / wedge)
    }

    /// Exponential map `exp_x(v)` where `x = v.base`.
    pub fn exp_map(&self, v: &TangentVector) -> Result<Point> {
        let x = &v.base;
        match &self.geometry {
            Geometry::Euclidean => Ok(Point::new(0, &x.coords + &v.components)),
            Geometry::Torus(periods) => {
                let mut c = &x.coords + &v.components;
                wrap_torus(&mut c, periods);
                Ok(Point::new(0, c))
            }
            Geometry::SpaceForm(sf) => Ok(sf.exp(x, &v.components)),
            Geometry::Chart(c) => {
                let norm = self.tangent_norm(v);
                if norm >= self.injectivity_radius {
                    return Err(Error::OutOfInjectivity {
                        norm,
                        radius: self.injectivity_radius,
                    });
                }
                let steps = ((norm / self.config.ode_step).ceil() as usize).max(8);
                let end = c.integrate_geodesic(&x.coords, &v.components, steps)?;
                Ok(Point::new(0, end))
            }
        }
    }

    /// `exp_x^{-1}(y)`.
    pub fn log_map(&self, x: &Point, y: &Point) -> Result<TangentVector> {
        let limit = self.log_radius();
        let v = match &self.geometry {
            Geometry::Euclidean => TangentVector::new(x.clone(), &y.coords - &x.coords),
            Geometry::Torus(periods) => {
                let mut d = &y.coords - &x.coords;
                for (di, p) in d.iter_mut().zip(periods) {
                    *di -= p * (*di / p).round();
                }
                TangentVector::new(x.clone(), d)
            }
            Geometry::SpaceForm(sf) => TangentVector::new(x.clone(), sf.log(x, y)?),
            Geometry::Chart(c) => {
                let y = self.to_chart(y, x.chart)?;
                let comps = c.shoot(&x.coords, &y.coords, &self.config)?;
                TangentVector::new(x.clone(), comps)
            }
        };
        let d = self.tangent_norm(&v);
        if d >= limit {
            return Err(Error::OutsideSafeRadius { distance: d, radius: limit });
        }
        Ok(v)
    }

    /// Riemannian distance, computed as `‖log_x(y)‖`.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        match &self.geometry {
            Geometry::SpaceForm(sf) => {
                let d = sf.distance(x, y);
                if d >= self.log_radius() {
                    return Err(Error::OutsideSafeRadius { distance: d, radius: self.log_radius() });
                }
                Ok(d)
            }
            _ => Ok(self.tangent_norm(&self.log_map(x, y)?)),
        }
    }

    /// Orthonormal frame at `x` obtained by Gram-Schmidt on the chart basis.
    pub fn orthonormal_frame(&self, x: &Point) -> Vec<DVector<f64>> {
        let basis: Vec<DVector<f64>> = (0..self.dim)
            .map(|i| {
                let mut e = DVector::zeros(self.dim);
                e[i] = 1.0;
                e
            })
            .collect();
        self.gram_schmidt(x, &basis)
    }

    /// Orthonormal frame at `x` whose first vector is `first / ‖first‖`.
    pub fn frame_with_first(&self, x: &Point, first: &DVector<f64>) -> Vec<DVector<f64>> {
        let mut candidates = vec![first.clone()];
        for i in 0..self.dim {
            let mut e = DVector::zeros(self.dim);
            e[i] = 1.0;
            candidates.push(e);
        }
        self.gram_schmidt(x, &candidates)
    }

    fn gram_schmidt(&self, x: &Point, candidates: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let g = self.metric(x);
        let ip = |a: &DVector<f64>, b: &DVector<f64>| (&g * b).dot(a);
        let mut frame: Vec<DVector<f64>> = Vec::with_capacity(self.dim);
        for c in candidates {
            if frame.len() == self.dim {
                break;
            }
            let scale = ip(c, c).sqrt();
            let mut w = c.clone();
            // two passes for numerical orthogonality
            for _ in 0..2 {
                for e in &frame {
                    let proj = ip(&w, e);
                    w -= e * proj;
                }
            }
            let n = ip(&w, &w).sqrt();
            if n > 1e-8 * scale.max(1e-300) {
                frame.push(w / n);
            }
        }
        frame
    }

    /// Largest deviation of `<e_i, e_j>` from `δ_ij`.
    pub fn frame_defect(&self, x: &Point, frame: &[DVector<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in frame.iter().enumerate() {
            for (j, b) in frame.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.inner(x, a, b) - target).abs());
            }
        }
        worst
    }

    /// Re-expresses `p` in chart `chart`.
    pub fn to_chart(&self, p: &Point, chart: usize) -> Result<Point> {
        if p.chart == chart {
            return Ok(p.clone());
        }
        match &self.geometry {
            Geometry::SpaceForm(sf) if chart < 2 => Ok(sf.in_chart(&sf.embed(p), chart)),
            _ => Err(Error::InvalidParameter(format!("unknown chart {chart}"))),
        }
    }

    /// Re-expresses a tangent vector in chart `chart`.
    pub fn tangent_to_chart(&self, v: &TangentVector, chart: usize) -> Result<TangentVector> {
        if v.base.chart == chart {
            return Ok(v.clone());
        }
        match &self.geometry {
            Geometry::SpaceForm(sf) => {
                let amb = sf.push(&v.base, &v.components);
                let base = self.to_chart(&v.base, chart)?;
                let comps = sf.pull(&base, &amb);
                Ok(TangentVector::new(base, comps))
            }
            _ => Err(Error::InvalidParameter(format!("unknown chart {chart}"))),
        }
    }

    /// Whether `a` and `b` denote the same point up to `tol` in coordinates.
    pub fn same_point(&self, a: &Point, b: &Point, tol: f64) -> bool {
        let Ok(b) = self.to_chart(b, a.chart) else {
            return false;
        };
        match &self.geometry {
            Geometry::Torus(periods) => {
                let mut d = &b.coords - &a.coords;
                for (di, p) in d.iter_mut().zip(periods) {
                    *di -= p * (*di / p).round();
                }
                d.amax() <= tol
            }
            _ => (&b.coords - &a.coords).amax() <= tol * (1.0 + a.coords.amax()),
        }
    }

    /// `v` expressed at `base` (converting chart), or a base mismatch error.
    pub fn align(&self, base: &Point, v: &TangentVector) -> Result<TangentVector> {
        if !self.same_point(base, &v.base, 1e-9) {
            return Err(Error::BaseMismatch);
        }
        let mut out = self.tangent_to_chart(v, base.chart)?;
        out.base = base.clone();
        Ok(out)
    }

    /// Geodesic acceleration `-Γ(x)(v, v)` combined with the parallel-transport
    /// derivative of each frame vector, used by the RK4 integrators.
    pub(crate) fn geodesic_rhs(
        &self,
        x: &DVector<f64>,
        chart: usize,
        v: &DVector<f64>,
        frame: &[DVector<f64>],
    ) -> (DVector<f64>, Vec<DVector<f64>>) {
        let gamma = self.christoffel(&Point::new(chart, x.clone()));
        let acc = -gamma.contract(v, v);
        let df = frame.iter().map(|e| -gamma.contract(v, e)).collect();
        (acc, df)
    }

    /// Reduces a coordinate difference to the shortest lattice representative (tori).
    pub(crate) fn wrap_delta(&self, d: &mut DVector<f64>) {
        if let Geometry::Torus(periods) = &self.geometry {
            for (di, p) in d.iter_mut().zip(periods) {
                *di -= p * (*di / p).round();
            }
        }
    }

    pub(crate) fn wrap(&self, coords: &mut DVector<f64>) {
        if let Geometry::Torus(periods) = &self.geometry {
            wrap_torus(coords, periods);
        }
    }

    /// Random tangent vector at `x` with norm uniform in `[0, max_norm)` and direction
    /// uniform in an orthonormal frame.
    pub fn random_tangent<R: rand::Rng + ?Sized>(
        &self,
        x: &Point,
        max_norm: f64,
        rng: &mut R,
    ) -> TangentVector {
        let dir = self.random_unit(x, rng);
        let r = max_norm * rng.gen::<f64>();
        dir.scaled(r)
    }

    /// Random unit tangent vector at `x`.
    pub fn random_unit<R: rand::Rng + ?Sized>(&self, x: &Point, rng: &mut R) -> TangentVector {
        let frame = self.orthonormal_frame(x);
        loop {
            let coeffs: Vec<f64> = (0..self.dim).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let n2: f64 = coeffs.iter().map(|c| c * c).sum();
            if n2 > 1e-4 && n2 <= 1.0 {
                let n = n2.sqrt();
                let mut comps = DVector::zeros(self.dim);
                for (c, e) in coeffs.iter().zip(&frame) {
                    comps += e * (*c / n);
                }
                return TangentVector::new(x.clone(), comps);
            }
        }
    }

    /// Random point `exp_center(w)` with `‖w‖ < radius`.
    pub fn random_point_near<R: rand::Rng + ?Sized>(
        &self,
        center: &Point,
        radius: f64,
        rng: &mut R,
    ) -> Result<Point> {
        let w = self.random_tangent(center, radius, rng);
        self.exp_map(&w)
    }
}

fn wrap_torus(c: &mut DVector<f64>, periods: &[f64]) {
    for (ci, p) in c.iter_mut().zip(periods) {
        *ci = ci.rem_euclid(*p);
        if *ci >= *p {
            *ci = 0.0;
        }
    }
}
