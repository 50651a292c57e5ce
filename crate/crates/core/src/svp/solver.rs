use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::ObjectiveFunction;
use super::search::{approximate_min_search, SearchOptions};
use super::series::{PerturbationSeries, StepCertificate, StepRecord};
use crate::bump::{bumpability_constant, scaled_bump, ScalarField};
use crate::config::GeometryConfig;
use crate::error::{Error, Result};
use crate::hessian::HessianForm;
use crate::manifold::{Point, TangentVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvpOptions {
    pub search: SearchOptions,
    pub geometry: GeometryConfig,
    /// Radii at which the strong-minimum property of the output is certified.
    pub certify_radii: Vec<f64>,
    /// Linear refinement of the certification net relative to the search net.
    pub refine_factor: usize,
    /// Upper cap on the certification net size.
    pub max_certify_points: usize,
    /// Strong-minimum gaps must exceed this; roundoff of `f - φ` sits far below it.
    pub certify_tolerance: f64,
    /// Reports are flagged incomplete when `1/n_K` stays above this.
    pub localization_target: Option<f64>,
}

impl Default for SvpOptions {
    fn default() -> Self {
        Self {
            search: SearchOptions::default(),
            geometry: GeometryConfig::default(),
            certify_radii: vec![0.1, 0.05],
            refine_factor: 4,
            max_certify_points: 200_000,
            certify_tolerance: 1e-12,
            localization_target: None,
        }
    }
}

/// `inf_{d(x, x*) >= ρ} (f - φ) - (f - φ)(x*)` on a refined net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongMinCertificate {
    pub radius: f64,
    pub center_value: f64,
    pub exterior_inf: f64,
    pub gap: f64,
    pub exterior_samples: usize,
    pub net_size: usize,
    pub net_resolution: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub objective: String,
    pub model: String,
    pub epsilon: f64,
    pub minimizer: Point,
    /// `(f - φ)(x*)`.
    pub min_value: f64,
    pub iterations: usize,
    /// `1 / n_K`.
    pub final_localization_radius: f64,
    /// `Σ R ε_k (1 + n_k + n_k²)`.
    pub y_ledger_total: f64,
    /// `(f - φ_k)(x_k)` for `k = 1..K`.
    pub values: Vec<f64>,
    pub centers: Vec<Point>,
    pub strong_min: Vec<StrongMinCertificate>,
    /// False when `final_localization_radius` exceeds the requested target.
    pub complete: bool,
}

impl SolverReport {
    pub fn strongly_certified(&self) -> bool {
        !self.strong_min.is_empty() && self.strong_min.iter().all(|c| c.passed)
    }
}

/// `f - φ`, with `+∞` where `f` is. The first failure of `φ` is kept in `err`.
fn perturbed<'a>(
    f: &'a ObjectiveFunction,
    phi: &'a PerturbationSeries,
    err: &'a OnceLock<Error>,
) -> impl Fn(&Point) -> f64 + Sync + 'a {
    move |x| {
        let v = f.eval(x);
        if v == f64::INFINITY {
            return v;
        }
        match phi.value(x) {
            Ok(p) => v - p,
            Err(e) => {
                let _ = err.set(e);
                f64::INFINITY
            }
        }
    }
}

fn take_error(err: &OnceLock<Error>) -> Result<()> {
    match err.get() {
        Some(e) => Err(e.clone()),
        None => Ok(()),
    }
}

/// One step: find an `ε_k`-approximate minimizer `x_k` of `f - φ_{k-1}` and append
/// `b_k = ε_k` bump of radius `1/n_k` at `x_k`.
pub fn svp_step(
    f: &ObjectiveFunction,
    phi: &PerturbationSeries,
    k: usize,
    n_k: usize,
    eps_k: f64,
    opts: &SvpOptions,
) -> Result<PerturbationSeries> {
    let model = f.model();
    let r = model.bumpability_radius();
    let delta = 1.0 / n_k as f64;
    if !(delta < r) {
        return Err(Error::InvalidParameter(format!("radius 1/{n_k} must be below {r}")));
    }
    if !(eps_k > 0.0) {
        return Err(Error::InvalidParameter(format!("step height {eps_k} must be positive")));
    }
    let err = OnceLock::new();
    let h = perturbed(f, phi, &err);
    let mut search = opts.search;
    search.seed = opts.search.seed.wrapping_add(k as u64);
    let last: Vec<Point> = phi.bumps().last().map(|b| b.center().clone()).into_iter().collect();
    let res = approximate_min_search(&h, model, f.region(), f.hints(), &last, &search)?;
    take_error(&err)?;
    if phi.is_empty() {
        f.check_values(&res.net_values)?;
    }
    if !(res.gap_estimate < eps_k) {
        return Err(Error::SearchGap {
            gap: res.gap_estimate,
            slack: eps_k,
        });
    }
    let bump = scaled_bump(&res.x_best, delta, eps_k, model)?;
    let mut next = phi.clone();
    next.push(bump.clone())?;

    let new_value = res.value - eps_k;
    let net_inf = res.net_inf();
    let mut exterior_inf = f64::INFINITY;
    for (p, v) in res.net_points.iter().zip(&res.net_values) {
        let far = match model.distance(&res.x_best, p) {
            Ok(d) => d >= delta,
            Err(_) => true,
        };
        if far {
            exterior_inf = exterior_inf.min(*v);
        }
    }
    let certificate = StepCertificate {
        new_value,
        net_inf,
        exterior_inf,
        radius: delta,
        net_size: res.net_points.len(),
        net_resolution: res.net_resolution,
        passed: new_value < net_inf && net_inf <= exterior_inf,
    };
    next.record(StepRecord {
        k,
        n_k,
        eps_k,
        center: res.x_best,
        search_value: res.value,
        gap_estimate: res.gap_estimate,
        evaluations: res.evaluations,
        certificate,
    });
    Ok(next)
}

/// `n_k = ceil(1/r) + k` and `ε_k = ε / (2^{k+1} R (1 + n_k + n_k²))`.
pub fn step_schedule(f: &ObjectiveFunction, eps: f64, k: usize) -> (usize, f64) {
    let model = f.model();
    let n0 = (1.0 / model.bumpability_radius()).ceil() as usize;
    let n = n0 + k;
    let nf = n as f64;
    let c = bumpability_constant(model);
    (n, eps / (2f64.powi(k as i32 + 1) * c * (1.0 + nf + nf * nf)))
}

/// Runs `k_max` steps and certifies the strong minimum of `f - φ` at the last center.
pub fn run_svp(
    f: &ObjectiveFunction,
    eps: f64,
    k_max: usize,
    opts: &SvpOptions,
) -> Result<(PerturbationSeries, SolverReport)> {
    if !(eps > 0.0 && eps.is_finite()) || k_max == 0 {
        return Err(Error::InvalidParameter("need eps > 0 and at least one step".into()));
    }
    opts.geometry.validate()?;
    opts.search.validate()?;
    let mut phi = PerturbationSeries::new(f.model(), eps)?;
    let mut values = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let (n_k, eps_k) = step_schedule(f, eps, k);
        phi = svp_step(f, &phi, k, n_k, eps_k, opts)?;
        values.push(phi.provenance().last().map_or(f64::NAN, |s| s.certificate.new_value));
    }
    let centers: Vec<Point> = phi.bumps().iter().map(|b| b.center().clone()).collect();
    let minimizer = centers.last().cloned().ok_or(Error::EmptyDomain)?;
    let min_value = f.eval(&minimizer) - phi.value(&minimizer)?;
    let strong_min = certify_strong_minimum(f, &phi, &minimizer, opts)?;
    let final_localization_radius = phi.bumps().last().map_or(f64::NAN, |b| b.delta());
    let report = SolverReport {
        objective: f.label().to_string(),
        model: f.model().label().to_string(),
        epsilon: eps,
        minimizer,
        min_value,
        iterations: k_max,
        final_localization_radius,
        y_ledger_total: phi.ledger_total(),
        values,
        centers,
        strong_min,
        complete: opts.localization_target.is_none_or(|t| final_localization_radius <= t),
    };
    Ok((phi, report))
}

/// Refined net: `refine_factor^dim` times the search net, plus hint refinement.
fn certification_net(f: &ObjectiveFunction, extra: &[Point], opts: &SvpOptions) -> Result<(Vec<Point>, f64)> {
    let model = f.model();
    let factor = opts.refine_factor.max(1).pow(model.dim() as u32);
    let count = opts.search.net_size.saturating_mul(factor).min(opts.max_certify_points);
    let net = f.region().net(model, count, Some(opts.search.seed ^ 0x5eed))?;
    let mut points = net.points;
    let mut hints = f.hints().to_vec();
    hints.extend_from_slice(extra);
    points.extend(f.region().refinement(model, &hints, net.resolution, opts.search.refine_depth));
    Ok((points, net.resolution))
}

fn perturbed_values(f: &ObjectiveFunction, phi: &PerturbationSeries, points: &[Point]) -> Result<Vec<f64>> {
    let err = OnceLock::new();
    let h = perturbed(f, phi, &err);
    let values = points.par_iter().map(h).collect();
    take_error(&err)?;
    Ok(values)
}

/// Strong-minimum certificates of `f - φ` at `x_star` for each configured radius.
pub fn certify_strong_minimum(
    f: &ObjectiveFunction,
    phi: &PerturbationSeries,
    x_star: &Point,
    opts: &SvpOptions,
) -> Result<Vec<StrongMinCertificate>> {
    let model = f.model();
    let (points, resolution) = certification_net(f, std::slice::from_ref(x_star), opts)?;
    let values = perturbed_values(f, phi, &points)?;
    let dists: Vec<f64> = points
        .par_iter()
        .map(|p| model.distance(x_star, p).unwrap_or(f64::INFINITY))
        .collect();
    let center_value = f.eval(x_star) - phi.value(x_star)?;
    let tolerance = opts.certify_tolerance;
    Ok(opts
        .certify_radii
        .iter()
        .map(|&rho| {
            let mut exterior_inf = f64::INFINITY;
            let mut exterior_samples = 0;
            for (v, d) in values.iter().zip(&dists) {
                if *d >= rho {
                    exterior_samples += 1;
                    exterior_inf = exterior_inf.min(*v);
                }
            }
            let gap = exterior_inf - center_value;
            StrongMinCertificate {
                radius: rho,
                center_value,
                exterior_inf,
                gap,
                exterior_samples,
                net_size: points.len(),
                net_resolution: resolution,
                tolerance,
                passed: exterior_samples > 0 && gap > tolerance,
            }
        })
        .collect())
}

/// Re-evaluates every step certificate of `phi` on the refined net.
pub fn recheck_step_certificates(
    f: &ObjectiveFunction,
    phi: &PerturbationSeries,
    opts: &SvpOptions,
) -> Result<Vec<StepCertificate>> {
    let model = f.model();
    let centers: Vec<Point> = phi.bumps().iter().map(|b| b.center().clone()).collect();
    let (points, resolution) = certification_net(f, &centers, opts)?;
    let mut old = perturbed_values(f, &phi.prefix(0), &points)?;
    let mut out = Vec::with_capacity(phi.len());
    for (k, b) in phi.bumps().iter().enumerate() {
        let next = phi.prefix(k + 1);
        let new = perturbed_values(f, &next, &points)?;
        let new_value = f.eval(b.center()) - next.value(b.center())?;
        let net_inf = old.iter().copied().fold(f64::INFINITY, f64::min);
        let mut exterior_inf = f64::INFINITY;
        for (p, v) in points.iter().zip(&new) {
            if model.distance(b.center(), p).map_or(true, |d| d >= b.delta()) {
                exterior_inf = exterior_inf.min(*v);
            }
        }
        out.push(StepCertificate {
            new_value,
            net_inf,
            exterior_inf,
            radius: b.delta(),
            net_size: points.len(),
            net_resolution: resolution,
            passed: new_value < net_inf && net_inf <= exterior_inf,
        });
        old = new;
    }
    Ok(out)
}

/// `(f - φ)(x)` with `dφ(x)` and `d²φ(x)`.
#[derive(Debug, Clone)]
pub struct PerturbedValue {
    pub value: f64,
    pub gradient: TangentVector,
    pub hessian: HessianForm,
}

pub fn evaluate_perturbed(
    f: &ObjectiveFunction,
    phi: &PerturbationSeries,
    x: &Point,
    cfg: &GeometryConfig,
) -> Result<PerturbedValue> {
    Ok(PerturbedValue {
        value: f.eval(x) - phi.value(x)?,
        gradient: phi.gradient(x)?,
        hessian: phi.hessian(x, cfg)?,
    })
}
