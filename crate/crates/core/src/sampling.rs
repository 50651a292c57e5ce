//! Sampling regions and deterministic quasi-uniform nets.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, Point, TangentVector};
use crate::numerics::halton;

/// A compact region of a model on which functions are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// `exp_center` of the tangent ball of radius `radius`.
    Ball { center: Point, radius: f64 },
    /// Coordinate box in chart 0.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

/// Net points with their nominal spacing.
#[derive(Debug, Clone)]
pub struct Net {
    pub points: Vec<Point>,
    pub resolution: f64,
}

fn unit_ball_volume(n: usize) -> f64 {
    // V_n = π^{n/2} / Γ(n/2 + 1), via the recursion V_n = 2π/n V_{n-2}
    let mut v = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
    while k <= n {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

impl Region {
    pub fn ball(center: Point, radius: f64) -> Self {
        Self::Ball { center, radius }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::Box { lo: vec![lo], hi: vec![hi] }
    }

    pub fn validate(&self, model: &ManifoldModel) -> Result<()> {
        match self {
            Self::Ball { center, radius } => {
                if center.dim() != model.dim() || !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidParameter("ball region needs a model point and a positive radius".into()));
                }
            }
            Self::Box { lo, hi } => {
                if lo.len() != model.dim() || hi.len() != model.dim() || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::InvalidParameter("box region needs lo < hi in every coordinate".into()));
                }
            }
        }
        Ok(())
    }

    /// Diameter-like size of the region.
    pub fn size(&self) -> f64 {
        match self {
            Self::Ball { radius, .. } => 2.0 * radius,
            Self::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt(),
        }
    }

    pub fn contains(&self, model: &ManifoldModel, x: &Point) -> bool {
        match self {
            Self::Ball { center, radius } => model.distance(center, x).map(|d| d <= *radius).unwrap_or(false),
            Self::Box { lo, hi } => model
                .to_chart(x, 0)
                .map(|p| p.coords.iter().zip(lo.iter().zip(hi)).all(|(c, (a, b))| *a <= *c && *c <= *b))
                .unwrap_or(false),
        }
    }

    /// A net of about `count` points. `seed` applies a random rotation/shift
    /// (Cranley-Patterson) to the low-discrepancy sequence; `None` leaves it unshifted.
    pub fn net(&self, model: &ManifoldModel, count: usize, seed: Option<u64>) -> Result<Net> {
        self.validate(model)?;
        if count == 0 {
            return Err(Error::EmptyDomain);
        }
        let n = model.dim();
        let shift: Vec<f64> = match seed {
            Some(s) => {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                (0..=n.max(2)).map(|_| rng.gen::<f64>()).collect()
            }
            None => vec![0.0; n.max(2) + 1],
        };
        let cube = |k: usize, dim: usize| -> Vec<f64> {
            halton(k as u64 + 1, dim)
                .iter()
                .zip(&shift)
                .map(|(u, s)| (u + s).fract())
                .collect()
        };
        let mut points = Vec::with_capacity(count);
        let resolution;
        match self {
            Self::Ball { center, radius } => {
                let frame = model.orthonormal_frame(center);
                let tangent = |c: &[f64]| {
                    let mut v = DVector::zeros(n);
                    for (ci, e) in c.iter().zip(&frame) {
                        v += e * *ci;
                    }
                    TangentVector::new(center.clone(), v)
                };
                let mut push = |v: TangentVector| match model.exp_map(&v) {
                    Ok(p) => {
                        points.push(p);
                        true
                    }
                    Err(_) => false,
                };
                match n {
                    1 => {
                        let m = count.max(2);
                        let offset = shift[0] / (m - 1) as f64;
                        for i in 0..m {
                            let s = -1.0 + 2.0 * ((i as f64 / (m - 1) as f64) + offset).min(1.0);
                            push(tangent(&[s * radius]));
                        }
                        resolution = 2.0 * radius / (m - 1) as f64;
                    }
                    2 => {
                        // area-uniform radii with golden-angle rotation
                        let golden = PI * (3.0 - 5.0_f64.sqrt());
                        for i in 0..count {
                            let r = radius * ((i as f64 + 0.5) / count as f64).sqrt();
                            let a = golden * i as f64 + 2.0 * PI * shift[0];
                            push(tangent(&[r * a.cos(), r * a.sin()]));
                        }
                        resolution = radius * (PI / count as f64).sqrt();
                    }
                    _ => {
                        let (mut k, mut got) = (0, 0);
                        while got < count && k < 64 * count {
                            let u = cube(k, n + 1);
                            k += 1;
                            let dir: Vec<f64> = (0..n).map(|i| 2.0 * u[i + 1] - 1.0).collect();
                            let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
                            if !(0.05..=1.0).contains(&norm) {
                                continue;
                            }
                            let r = radius * u[0].powf(1.0 / n as f64) / norm;
                            if push(tangent(&dir.iter().map(|d| d * r).collect::<Vec<_>>())) {
                                got += 1;
                            }
                        }
                        resolution = radius * (unit_ball_volume(n) / count as f64).powf(1.0 / n as f64);
                    }
                }
            }
            Self::Box { lo, hi } => {
                if n == 1 {
                    let m = count.max(2);
                    let h = (hi[0] - lo[0]) / (m - 1) as f64;
                    for i in 0..m {
                        let x = (lo[0] + h * (i as f64 + shift[0])).min(hi[0]);
                        if let Ok(p) = model.point(&[x]) {
                            points.push(p);
                        }
                    }
                    resolution = h;
                } else {
                    for k in 0..count {
                        let u = cube(k, n);
                        let c: Vec<f64> = (0..n).map(|i| lo[i] + u[i] * (hi[i] - lo[i])).collect();
                        if let Ok(p) = model.point(&c) {
                            points.push(p);
                        }
                    }
                    let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
                    resolution = (vol / count as f64).powf(1.0 / n as f64);
                }
            }
        }
        if points.is_empty() {
            return Err(Error::EmptyDomain);
        }
        Ok(Net { points, resolution })
    }

    /// Extra points clustered geometrically around `hints`, down to `resolution * 2^-depth`.
    pub fn refinement(&self, model: &ManifoldModel, hints: &[Point], resolution: f64, depth: usize) -> Vec<Point> {
        let mut out = Vec::new();
        for p in hints {
            if self.contains(model, p) {
                out.push(p.clone());
            }
            let frame = model.orthonormal_frame(p);
            for j in 0..=depth {
                let s = resolution * 0.5_f64.powi(j as i32);
                for e in &frame {
                    for sign in [-1.0, 1.0] {
                        if let Ok(q) = model.exp_map(&TangentVector::new(p.clone(), e * (sign * s))) {
                            if self.contains(model, &q) {
                                out.push(q);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}
