use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, Point, TangentVector};
use crate::sampling::Region;

/// Budget and shape of [`approximate_min_search`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchOptions {
    /// Total number of evaluations, at least 100.
    pub budget: usize,
    /// Size of the initial net (capped at half the budget).
    pub net_size: usize,
    /// Number of lowest net points used as local-search starts.
    pub starts: usize,
    /// Local search stops once its step falls below this.
    pub min_step: f64,
    /// Geometric refinement depth around hints.
    pub refine_depth: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: 20_000,
            net_size: 4_000,
            starts: 4,
            min_step: 1e-12,
            refine_depth: 24,
            seed: 0,
        }
    }
}

impl SearchOptions {
    pub fn validate(&self) -> Result<()> {
        if self.budget < 100 {
            return Err(Error::InvalidParameter(format!(
                "search budget {} below the minimum of 100 evaluations",
                self.budget
            )));
        }
        if self.net_size == 0 || self.starts == 0 || !(self.min_step > 0.0) {
            return Err(Error::InvalidParameter("net_size, starts and min_step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub x_best: Point,
    pub value: f64,
    /// Decrease achieved on the last local-search level; a proxy for `h(x_best) - inf h`.
    pub gap_estimate: f64,
    pub evaluations: usize,
    pub net_points: Vec<Point>,
    pub net_values: Vec<f64>,
    pub net_resolution: f64,
}

impl SearchResult {
    /// Smallest value over the net.
    pub fn net_inf(&self) -> f64 {
        self.net_values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

struct Descent {
    x: Point,
    value: f64,
    last_gain: f64,
    evaluations: usize,
}

/// Compass search along the orthonormal frame, halving the step when stuck.
#[allow(clippy::too_many_arguments)]
fn compass(
    h: &(dyn Fn(&Point) -> f64 + Sync),
    model: &ManifoldModel,
    region: &Region,
    start: Point,
    value: f64,
    step: f64,
    opts: &SearchOptions,
    budget: usize,
) -> Descent {
    let mut d = Descent {
        x: start,
        value,
        last_gain: 0.0,
        evaluations: 0,
    };
    let mut step = step;
    let mut level_start = value;
    while step >= opts.min_step && d.evaluations < budget {
        let frame = model.orthonormal_frame(&d.x);
        let mut best: Option<(Point, f64)> = None;
        for e in &frame {
            for sign in [1.0, -1.0] {
                let Ok(q) = model.exp_map(&TangentVector::new(d.x.clone(), e * (sign * step))) else {
                    continue;
                };
                if !region.contains(model, &q) {
                    continue;
                }
                let v = h(&q);
                d.evaluations += 1;
                if v < best.as_ref().map_or(d.value, |b| b.1) {
                    best = Some((q, v));
                }
            }
        }
        match best {
            Some((q, v)) => {
                d.x = q;
                d.value = v;
            }
            None => {
                d.last_gain = level_start - d.value;
                level_start = d.value;
                step *= 0.5;
            }
        }
    }
    if step >= opts.min_step {
        // budget exhausted mid-level
        d.last_gain = d.last_gain.max(level_start - d.value);
    }
    d
}

/// Approximate minimizer of `h` over `region`: a seeded net (refined around `hints`),
/// then multistart compass search from the lowest net points and from `extra_starts`.
///
/// Ties are broken by the lowest net index. Returns [`Error::EmptyDomain`] when every
/// net value is `+∞`.
pub fn approximate_min_search(
    h: &(dyn Fn(&Point) -> f64 + Sync),
    model: &ManifoldModel,
    region: &Region,
    hints: &[Point],
    extra_starts: &[Point],
    opts: &SearchOptions,
) -> Result<SearchResult> {
    opts.validate()?;
    let net = region.net(model, opts.net_size.min(opts.budget / 2), Some(opts.seed))?;
    let mut points = net.points;
    points.extend(region.refinement(model, hints, net.resolution, opts.refine_depth));
    let values: Vec<f64> = points.par_iter().map(h).collect();
    if values.iter().all(|v| *v == f64::INFINITY) {
        return Err(Error::EmptyDomain);
    }
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| values[i] < f64::INFINITY).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut starts: Vec<(Point, f64)> = order
        .iter()
        .take(opts.starts)
        .map(|&i| (points[i].clone(), values[i]))
        .collect();
    for p in extra_starts {
        if region.contains(model, p) {
            let v = h(p);
            if v < f64::INFINITY {
                starts.push((p.clone(), v));
            }
        }
    }
    let mut evaluations = points.len() + starts.len();
    let mut best: Option<Descent> = None;
    let count = starts.len();
    for (i, (p, v)) in starts.into_iter().enumerate() {
        let remaining = opts.budget.saturating_sub(evaluations);
        let share = remaining / (count - i);
        let d = compass(h, model, region, p, v, net.resolution, opts, share);
        evaluations += d.evaluations;
        if best.as_ref().is_none_or(|b| d.value < b.value) {
            best = Some(d);
        }
    }
    let best = best.ok_or(Error::EmptyDomain)?;
    Ok(SearchResult {
        x_best: best.x,
        value: best.value,
        gap_estimate: best.last_gain,
        evaluations,
        net_points: points,
        net_values: values,
        net_resolution: net.resolution,
    })
}
