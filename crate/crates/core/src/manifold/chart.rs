//! Metrics supplied as a chart callback.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::Christoffel;
use crate::config::GeometryConfig;
use crate::error::{Error, Result};

/// Metric callback `x ↦ g(x)`.
pub type MetricFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Closed-form Christoffel symbols `x ↦ Γ(x)`, replacing the metric differences.
pub type ChristoffelFn = Arc<dyn Fn(&DVector<f64>) -> Christoffel + Send + Sync>;

/// Bounded coordinate domain of a chart.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartDomain {
    Ball { center: DVector<f64>, radius: f64 },
    Box { lo: DVector<f64>, hi: DVector<f64> },
}

impl ChartDomain {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Self::Ball {
            center: DVector::from_vec(center),
            radius,
        }
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self::Box {
            lo: DVector::from_vec(lo),
            hi: DVector::from_vec(hi),
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        match self {
            Self::Ball { center, radius } => (x - center).norm() < *radius,
            Self::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi.iter())).all(|(v, (l, h))| v > l && v < h),
        }
    }

    pub fn center(&self) -> DVector<f64> {
        match self {
            Self::Ball { center, .. } => center.clone(),
            Self::Box { lo, hi } => (lo + hi) * 0.5,
        }
    }

    /// Radius of the largest coordinate ball around the center inside the domain.
    pub fn inner_radius(&self) -> f64 {
        match self {
            Self::Ball { radius, .. } => *radius,
            Self::Box { lo, hi } => (hi - lo).iter().cloned().fold(f64::INFINITY, f64::min) / 2.0,
        }
    }

    fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } => center.len(),
            Self::Box { lo, .. } => lo.len(),
        }
    }
}

/// A Riemannian metric on a single bounded chart.
#[derive(Clone)]
pub struct ChartMetric {
    name: String,
    dim: usize,
    metric: MetricFn,
    christoffel: Option<ChristoffelFn>,
    domain: ChartDomain,
    curvature_bound: Option<f64>,
    injectivity_radius: Option<f64>,
    convexity_radius: Option<f64>,
    fd_step: f64,
}

impl fmt::Debug for ChartMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartMetric")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("curvature_bound", &self.curvature_bound)
            .finish()
    }
}

impl ChartMetric {
    pub fn new(name: impl Into<String>, dim: usize, metric: MetricFn, domain: ChartDomain) -> Self {
        debug_assert_eq!(domain.dim(), dim);
        Self {
            name: name.into(),
            dim,
            metric,
            christoffel: None,
            domain,
            curvature_bound: None,
            injectivity_radius: None,
            convexity_radius: None,
            fd_step: GeometryConfig::default().fd_step,
        }
    }

    pub fn with_curvature_bound(mut self, k0: f64) -> Self {
        self.curvature_bound = Some(k0);
        self
    }

    pub fn with_injectivity_radius(mut self, r: f64) -> Self {
        self.injectivity_radius = Some(r);
        self
    }

    pub fn with_convexity_radius(mut self, r: f64) -> Self {
        self.convexity_radius = Some(r);
        self
    }

    pub fn with_christoffel(mut self, gamma: ChristoffelFn) -> Self {
        self.christoffel = Some(gamma);
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    pub fn curvature_bound(&self) -> Option<f64> {
        self.curvature_bound
    }

    pub fn injectivity_radius(&self) -> Option<f64> {
        self.injectivity_radius
    }

    pub fn convexity_radius(&self) -> Option<f64> {
        self.convexity_radius
    }

    pub fn metric(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.metric)(x)
    }

    pub fn christoffel(&self, x: &DVector<f64>) -> Christoffel {
        if let Some(gamma) = &self.christoffel {
            return gamma(x);
        }
        christoffel_from_metric(&|c: &DVector<f64>| self.metric(c), x, self.fd_step)
    }

    /// `R(u, v) w` from second differences of the metric (step `10 * fd_step`).
    pub fn curvature_apply(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        v: &DVector<f64>,
        w: &DVector<f64>,
    ) -> DVector<f64> {
        let n = self.dim;
        let h = 10.0 * self.fd_step;
        let g0 = self.metric(x);
        let ginv = g0.clone().try_inverse().expect("metric must be invertible");
        let shifted = |pairs: &[(usize, f64)]| {
            let mut y = x.clone();
            for &(i, s) in pairs {
                y[i] += s;
            }
            self.metric(&y)
        };
        // first and second partial derivatives of g
        let mut d1 = Vec::with_capacity(n);
        let mut plus = Vec::with_capacity(n);
        let mut minus = Vec::with_capacity(n);
        for i in 0..n {
            let gp = shifted(&[(i, h)]);
            let gm = shifted(&[(i, -h)]);
            d1.push((&gp - &gm) / (2.0 * h));
            plus.push(gp);
            minus.push(gm);
        }
        let mut d2 = vec![vec![DMatrix::zeros(n, n); n]; n];
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            d2[i][i] = (&plus[i] - &g0 * 2.0 + &minus[i]) / (h * h);
            for j in (i + 1)..n {
                let pp = shifted(&[(i, h), (j, h)]);
                let pm = shifted(&[(i, h), (j, -h)]);
                let mp = shifted(&[(i, -h), (j, h)]);
                let mm = shifted(&[(i, -h), (j, -h)]);
                let m = (pp - pm - mp + mm) / (4.0 * h * h);
                d2[i][j] = m.clone();
                d2[j][i] = m;
            }
        }
        // Christoffel symbols of the first kind and their derivatives
        let first = |m: usize, i: usize, j: usize| 0.5 * (d1[i][(m, j)] + d1[j][(m, i)] - d1[m][(i, j)]);
        let dfirst =
            |k: usize, m: usize, i: usize, j: usize| 0.5 * (d2[k][i][(m, j)] + d2[k][j][(m, i)] - d2[k][m][(i, j)]);
        let mut gamma = Christoffel::zeros(n);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let v: f64 = (0..n).map(|m| ginv[(l, m)] * first(m, i, j)).sum();
                    gamma.set(l, i, j, v);
                }
            }
        }
        let dginv: Vec<DMatrix<f64>> = (0..n).map(|k| -(&ginv * &d1[k] * &ginv)).collect();
        // dgamma[k][l][i][j] = ∂_k Γ^l_ij
        let idx = |k: usize, l: usize, i: usize, j: usize| ((k * n + l) * n + i) * n + j;
        let mut dgamma = vec![0.0; n * n * n * n];
        for k in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = 0.0;
                        for m in 0..n {
                            acc += dginv[k][(l, m)] * first(m, i, j) + ginv[(l, m)] * dfirst(k, m, i, j);
                        }
                        dgamma[idx(k, l, i, j)] = acc;
                    }
                }
            }
        }
        // standard Riemann tensor R^l_ijk, then negate for the Jacobi-operator convention
        let mut out = DVector::zeros(n);
        for l in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let uv = u[i] * v[j];
                    if uv == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        if w[k] == 0.0 {
                            continue;
                        }
                        let mut r = dgamma[idx(i, l, j, k)] - dgamma[idx(j, l, i, k)];
                        for m in 0..n {
                            r += gamma.get(l, i, m) * gamma.get(m, j, k) - gamma.get(l, j, m) * gamma.get(m, i, k);
                        }
                        acc += r * uv * w[k];
                    }
                }
            }
            out[l] = -acc;
        }
        out
    }

    fn geodesic_field(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        -self.christoffel(x).contract(v, v)
    }

    /// RK4 integration of the geodesic equation over `[0, 1]` with initial velocity `v`.
    pub fn integrate_geodesic(&self, x: &DVector<f64>, v: &DVector<f64>, steps: usize) -> Result<DVector<f64>> {
        let h = 1.0 / steps as f64;
        let mut p = x.clone();
        let mut q = v.clone();
        for _ in 0..steps {
            let k1x = q.clone();
            let k1v = self.geodesic_field(&p, &q);
            let p2 = &p + &k1x * (h / 2.0);
            let q2 = &q + &k1v * (h / 2.0);
            let k2v = self.geodesic_field(&p2, &q2);
            let p3 = &p + &q2 * (h / 2.0);
            let q3 = &q + &k2v * (h / 2.0);
            let k3v = self.geodesic_field(&p3, &q3);
            let p4 = &p + &q3 * h;
            let q4 = &q + &k3v * h;
            let k4v = self.geodesic_field(&p4, &q4);
            p += (&k1x + &q2 * 2.0 + &q3 * 2.0 + &q4) * (h / 6.0);
            q += (&k1v + &k2v * 2.0 + &k3v * 2.0 + &k4v) * (h / 6.0);
            if !self.domain.contains(&p) {
                return Err(Error::LeftChartDomain);
            }
        }
        Ok(p)
    }

    /// Initial velocity `v` with `exp_x(v) = y`, by damped Newton shooting.
    pub fn shoot(&self, x: &DVector<f64>, y: &DVector<f64>, cfg: &GeometryConfig) -> Result<DVector<f64>> {
        let n = self.dim;
        let mut v = y - x;
        if v.norm() == 0.0 {
            return Ok(v);
        }
        let g = self.metric(x);
        let guess_len = (&g * &v).dot(&v).sqrt();
        let steps = ((1.5 * guess_len / cfg.ode_step).ceil() as usize).max(16);
        let scale = 1.0 + y.amax();
        let residual = |v: &DVector<f64>| -> Result<DVector<f64>> { Ok(self.integrate_geodesic(x, v, steps)? - y) };
        // the Jacobian only steers Newton, so a coarser grid is enough
        let coarse = (steps / 8).max(16);
        let coarse_end = |v: &DVector<f64>| self.integrate_geodesic(x, v, coarse);
        let mut r = residual(&v)?;
        for _ in 0..60 {
            if r.norm() < 1e-14 * scale {
                return Ok(v);
            }
            let eta = 1e-7 * (1.0 + v.norm());
            let mut jac = DMatrix::zeros(n, n);
            for j in 0..n {
                let mut vp = v.clone();
                vp[j] += eta;
                let mut vm = v.clone();
                vm[j] -= eta;
                let col = (coarse_end(&vp)? - coarse_end(&vm)?) / (2.0 * eta);
                jac.set_column(j, &col);
            }
            let step = jac.lu().solve(&r).ok_or(Error::ShootingFailed { residual: r.norm() })?;
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-4 {
                let cand = &v - &step * alpha;
                if let Ok(rc) = residual(&cand) {
                    if rc.norm() < r.norm() {
                        v = cand;
                        r = rc;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if r.norm() < 1e-10 * scale {
            Ok(v)
        } else {
            Err(Error::ShootingFailed { residual: r.norm() })
        }
    }
}

/// Christoffel symbols from central differences of a metric callback.
pub(crate) fn christoffel_from_metric(
    metric: &dyn Fn(&DVector<f64>) -> DMatrix<f64>,
    x: &DVector<f64>,
    h: f64,
) -> Christoffel {
    let n = x.len();
    let ginv = metric(x).try_inverse().expect("metric must be invertible");
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|k| {
            let mut p = x.clone();
            p[k] += h;
            let mut m = x.clone();
            m[k] -= h;
            (metric(&p) - metric(&m)) / (2.0 * h)
        })
        .collect();
    let mut gamma = Christoffel::zeros(n);
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for m in 0..n {
                    acc += ginv[(l, m)] * 0.5 * (dg[i][(m, j)] + dg[j][(m, i)] - dg[m][(i, j)]);
                }
                gamma.set(l, i, j, acc);
            }
        }
    }
    gamma
}
