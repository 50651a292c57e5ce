//! Round spheres and hyperbolic spaces through their standard embeddings.
//!
//! Spheres of curvature `k = 1/ρ²` use two stereographic charts: chart 0 is centered
//! at the north pole `(0, .., 0, ρ)`, chart 1 at the south pole. Hyperbolic spaces of
//! curvature `k = -κ` use the single graph chart `x ↦ (x, sqrt(1/κ + |x|²))` of the
//! hyperboloid in Minkowski space. In both cases `<P, P> = 1/k` for the ambient form.

use nalgebra::{DMatrix, DVector};

use super::{Christoffel, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct SpaceForm {
    k: f64,
}

impl SpaceForm {
    pub fn new(k: f64) -> Self {
        debug_assert!(k != 0.0);
        Self { k }
    }

    pub fn curvature(&self) -> f64 {
        self.k
    }

    fn spherical(&self) -> bool {
        self.k > 0.0
    }

    fn rho(&self) -> f64 {
        1.0 / self.k.abs().sqrt()
    }

    fn chart_sign(chart: usize) -> f64 {
        if chart == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn ambient_inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let n = a.len() - 1;
        let spatial = a.rows(0, n).dot(&b.rows(0, n));
        if self.spherical() {
            spatial + a[n] * b[n]
        } else {
            spatial - a[n] * b[n]
        }
    }

    pub fn embed(&self, p: &Point) -> DVector<f64> {
        let n = p.coords.len();
        let u = &p.coords;
        let s = u.norm_squared();
        let mut x = DVector::zeros(n + 1);
        if self.spherical() {
            let rho = self.rho();
            for i in 0..n {
                x[i] = rho * 2.0 * u[i] / (1.0 + s);
            }
            x[n] = Self::chart_sign(p.chart) * rho * (1.0 - s) / (1.0 + s);
        } else {
            for i in 0..n {
                x[i] = u[i];
            }
            x[n] = (1.0 / self.k.abs() + s).sqrt();
        }
        x
    }

    /// Nearest point of the model surface to an ambient vector.
    pub fn project(&self, a: &DVector<f64>) -> DVector<f64> {
        let n = a.len() - 1;
        if self.spherical() {
            a * (self.rho() / a.norm())
        } else {
            let mut x = a.clone();
            x[n] = (1.0 / self.k.abs() + a.rows(0, n).norm_squared()).sqrt();
            x
        }
    }

    pub fn in_chart(&self, x: &DVector<f64>, chart: usize) -> Point {
        let n = x.len() - 1;
        if self.spherical() {
            let denom = self.rho() + Self::chart_sign(chart) * x[n];
            Point::new(chart, DVector::from_fn(n, |i, _| x[i] / denom))
        } else {
            Point::new(0, x.rows(0, n).into_owned())
        }
    }

    /// Chart point with coordinates in the closed unit ball (spheres) or the graph chart.
    pub fn chart_point(&self, x: &DVector<f64>) -> Point {
        let n = x.len() - 1;
        let chart = if self.spherical() && x[n] < 0.0 { 1 } else { 0 };
        self.in_chart(x, chart)
    }

    fn jacobian(&self, p: &Point) -> DMatrix<f64> {
        let n = p.coords.len();
        let u = &p.coords;
        let s = u.norm_squared();
        let mut j = DMatrix::zeros(n + 1, n);
        if self.spherical() {
            let rho = self.rho();
            let d = (1.0 + s) * (1.0 + s);
            for a in 0..n {
                for b in 0..n {
                    let delta = if a == b { 1.0 } else { 0.0 };
                    j[(a, b)] = 2.0 * rho * (delta * (1.0 + s) - 2.0 * u[a] * u[b]) / d;
                }
            }
            let sign = Self::chart_sign(p.chart);
            for b in 0..n {
                j[(n, b)] = -sign * 4.0 * rho * u[b] / d;
            }
        } else {
            let h = (1.0 / self.k.abs() + s).sqrt();
            for a in 0..n {
                j[(a, a)] = 1.0;
                j[(n, a)] = u[a] / h;
            }
        }
        j
    }

    pub fn push(&self, p: &Point, comps: &DVector<f64>) -> DVector<f64> {
        self.jacobian(p) * comps
    }

    /// Chart components of an ambient tangent vector at `p`.
    pub fn pull(&self, p: &Point, v: &DVector<f64>) -> DVector<f64> {
        let n = p.coords.len();
        if self.spherical() {
            let s = p.coords.norm_squared();
            let rho = self.rho();
            let f = (1.0 + s) * (1.0 + s) / (4.0 * rho * rho);
            self.jacobian(p).transpose() * v * f
        } else {
            // spatial part, after removing any component normal to the hyperboloid
            let x = self.embed(p);
            let normal = self.ambient_inner(v, &x) * self.k;
            let tangential = v - &x * normal;
            tangential.rows(0, n).into_owned()
        }
    }

    pub fn metric(&self, p: &Point) -> DMatrix<f64> {
        let n = p.coords.len();
        let u = &p.coords;
        let s = u.norm_squared();
        if self.spherical() {
            let rho = self.rho();
            DMatrix::identity(n, n) * (4.0 * rho * rho / ((1.0 + s) * (1.0 + s)))
        } else {
            let h2 = 1.0 / self.k.abs() + s;
            DMatrix::identity(n, n) - (u * u.transpose()) / h2
        }
    }

    pub fn christoffel(&self, p: &Point) -> Christoffel {
        let n = p.coords.len();
        let u = &p.coords;
        let s = u.norm_squared();
        let mut g = Christoffel::zeros(n);
        if self.spherical() {
            // conformal metric e^{2f} I with ∂_i f = -2 u_i / (1 + s)
            let df: Vec<f64> = (0..n).map(|i| -2.0 * u[i] / (1.0 + s)).collect();
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut v = 0.0;
                        if i == k {
                            v += df[j];
                        }
                        if j == k {
                            v += df[i];
                        }
                        if i == j {
                            v -= df[k];
                        }
                        g.set(k, i, j, v);
                    }
                }
            }
        } else {
            let kappa = self.k.abs();
            let h2 = 1.0 / kappa + s;
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        g.set(l, i, j, -kappa * u[l] * (delta - u[i] * u[j] / h2));
                    }
                }
            }
        }
        g
    }

    fn sn(&self, t: f64) -> f64 {
        let c = self.k.abs().sqrt();
        if self.spherical() {
            (c * t).sin() / c
        } else {
            (c * t).sinh() / c
        }
    }

    fn cs(&self, t: f64) -> f64 {
        let c = self.k.abs().sqrt();
        if self.spherical() {
            (c * t).cos()
        } else {
            (c * t).cosh()
        }
    }

    /// Point at arc length `t` along the unit-speed geodesic from `p` with direction `u`.
    pub fn geodesic_point(&self, p: &DVector<f64>, u: &DVector<f64>, t: f64) -> DVector<f64> {
        p * self.cs(t) + u * self.sn(t)
    }

    /// Velocity at arc length `t`: derivative of [`Self::geodesic_point`].
    pub fn geodesic_velocity(&self, p: &DVector<f64>, u: &DVector<f64>, t: f64) -> DVector<f64> {
        // d/dt cs = -k sn
        p * (-self.k * self.sn(t)) + u * self.cs(t)
    }

    /// Parallel transport of the ambient tangent `v` at `p` to arc length `t`.
    pub fn transport(&self, p: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>, t: f64) -> DVector<f64> {
        let along = self.ambient_inner(v, u);
        v + (self.geodesic_velocity(p, u, t) - u) * along
    }

    pub fn exp(&self, x: &Point, comps: &DVector<f64>) -> Point {
        let p = self.embed(x);
        let v = self.push(x, comps);
        let len = self.ambient_inner(&v, &v).max(0.0).sqrt();
        if len == 0.0 {
            return x.clone();
        }
        let q = self.geodesic_point(&p, &(v / len), len);
        self.chart_point(&self.project(&q))
    }

    /// Unit direction (ambient) and length of the minimizing geodesic from `x` to `y`.
    pub fn direction(&self, x: &Point, y: &Point) -> Result<(DVector<f64>, f64)> {
        let p = self.embed(x);
        let q = self.embed(y);
        let cp = self.k * self.ambient_inner(&p, &q);
        let w = &q - &p * cp;
        let wn = self.ambient_inner(&w, &w).max(0.0).sqrt();
        let c = self.k.abs().sqrt();
        let theta = if self.spherical() {
            (c * wn).atan2(cp)
        } else {
            (c * wn).asinh()
        };
        if self.spherical() && wn < 1e-14 && cp < 0.0 {
            return Err(Error::OutsideSafeRadius {
                distance: std::f64::consts::PI / c,
                radius: std::f64::consts::PI / c,
            });
        }
        if wn == 0.0 {
            return Ok((DVector::zeros(p.len()), 0.0));
        }
        Ok((w / wn, theta / c))
    }

    pub fn log(&self, x: &Point, y: &Point) -> Result<DVector<f64>> {
        let (u, d) = self.direction(x, y)?;
        Ok(self.pull(x, &(u * d)))
    }

    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        match self.direction(x, y) {
            Ok((_, d)) => d,
            Err(_) => std::f64::consts::PI * self.rho(),
        }
    }
}
