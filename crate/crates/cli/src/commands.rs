use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use riemsvp_core::bump::{estimate_y_norm_at, verify_bumpability_constants, BumpFunction};
use riemsvp_core::distsq::{hessian_upper_bound, verify_hessian_bounds};
use riemsvp_core::fixtures::{self, FixtureInfo};
use riemsvp_core::jacobi::{
    index_form, index_form_upper_bound, jacobi_bvp, rauch_compare, sn_cs, z_field, FieldAlongGeodesic,
};
use riemsvp_core::svp::{extract_subjet, run_svp, witness_local_min_margin, ObjectiveFunction, SearchOptions, SvpOptions};
use riemsvp_core::{GeodesicSegment, GeometryConfig, ManifoldModel, Point, SqDistFunction, TangentVector};

use crate::job::{Command, JobSpec};
use crate::report::ReportRecord;
use crate::CliError;

type Output = (Vec<ReportRecord>, Option<serde_json::Value>);

/// Built-in models and objectives whose id contains `filter` (all when empty).
pub fn list_fixtures(filter: &str) -> Vec<FixtureInfo> {
    fixtures::list_fixtures().into_iter().filter(|f| f.id.contains(filter)).collect()
}

pub(crate) fn dispatch(spec: &JobSpec) -> Result<Output, CliError> {
    match spec.command {
        Command::VerifyHessian => verify_hessian(spec),
        Command::VerifyBump => verify_bump(spec),
        Command::VerifyRauch => verify_rauch(spec),
        Command::VerifyIndex => verify_index(spec),
        Command::RunSvp => svp(spec),
        Command::ExtractSubjet => subjet(spec),
    }
}

fn model(spec: &JobSpec) -> Result<ManifoldModel, CliError> {
    let m = spec.model.as_ref().ok_or_else(|| CliError::Usage("missing model".into()))?.build()?;
    Ok(m.with_config(spec.geometry))
}

fn seconds(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Lengths checked against the radius below which the command's operations are defined.
fn lengths(spec: &JobSpec, default: &[f64], limit: f64) -> Result<Vec<f64>, CliError> {
    let ls = spec.params.lengths.clone().unwrap_or_else(|| default.to_vec());
    if let Some(l) = ls.iter().find(|l| **l >= limit) {
        return Err(CliError::Usage(format!("length {l} is not below the admissible radius {limit}")));
    }
    Ok(ls)
}

fn segment(m: &ManifoldModel, x: &Point, dir: &DVector<f64>, len: f64, cfg: &GeometryConfig) -> Result<Arc<GeodesicSegment>, CliError> {
    Ok(Arc::new(GeodesicSegment::from_direction(m, &TangentVector::new(x.clone(), dir.clone()), len, cfg)?))
}

/// `2ℓ √K cot(√K ℓ)` (`2` when flat, `2ℓ √-K coth` when negative).
fn orthogonal_eigenvalue(k: f64, len: f64) -> f64 {
    let (sn, cs) = sn_cs(k, len);
    2.0 * len * cs / sn
}

const CLOSED_FORM_TOLERANCE: f64 = 1e-6;

fn verify_hessian(spec: &JobSpec) -> Result<Output, CliError> {
    let m = model(spec)?;
    let cfg = spec.geometry;
    let limit = m.safe_radius().min(m.log_radius());
    let ls = lengths(spec, &[0.2, 0.5, PI / 4.0, 1.0, 1.4], limit)?;
    let z = m.reference_point();
    let phi = SqDistFunction::with_max_radius(&m, &z)?;
    let frame = m.orthonormal_frame(&z);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or(0));
    let mut out = Vec::new();
    for len in ls {
        let t = Instant::now();
        let seg = segment(&m, &z, &frame[0], len, &cfg)?;
        let x = seg.end();
        let rep = verify_hessian_bounds(&phi, x, &cfg)?;
        let mut c = DVector::zeros(m.dim());
        c[1] = 1.0;
        let v = seg.vector_from_frame(seg.sample_count() - 1, &c);
        let orth = phi.hessian(x, &cfg)?.quadratic(&m, &v)?;
        let mut margin = rep.lower_margin.min(rep.upper_margin);
        let mut r = ReportRecord::new("reference")
            .input("length", len)
            .input("curvature_bound", m.curvature_bound())
            .measured("lambda_min", rep.eigenvalues[0])
            .measured("lambda_max", rep.eigenvalues[rep.eigenvalues.len() - 1])
            .measured("orthogonal", orth)
            .measured("tangent_defect", rep.tangent_defect)
            .bound("upper", rep.upper_bound);
        if let Some(k) = m.constant_curvature() {
            let closed = orthogonal_eigenvalue(k, len);
            r = r.bound("closed_form", closed);
            margin = margin.min(CLOSED_FORM_TOLERANCE - (orth - closed).abs());
        } else {
            r = r.bound("closed_form", f64::NAN);
        }
        out.push(r.finish(margin, cfg.tolerance, seconds(t)));

        if let Some(n) = spec.params.samples {
            let t = Instant::now();
            let (mut lo, mut hi, mut worst) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
            let reach = (0.5 * limit).min(1.0);
            for _ in 0..n {
                let zz = m.random_point_near(&z, reach, &mut rng)?;
                let w = m.random_unit(&zz, &mut rng).scaled(len);
                let x = m.exp_map(&w)?;
                let p = SqDistFunction::with_max_radius(&m, &zz)?;
                let rep = verify_hessian_bounds(&p, &x, &cfg)?;
                lo = lo.min(rep.eigenvalues[0]);
                hi = hi.max(rep.eigenvalues[rep.eigenvalues.len() - 1]);
                worst = worst.min(rep.lower_margin.min(rep.upper_margin));
            }
            out.push(
                ReportRecord::new("random")
                    .input("length", len)
                    .input("curvature_bound", m.curvature_bound())
                    .measured("lambda_min", lo)
                    .measured("lambda_max", hi)
                    .measured("orthogonal", f64::NAN)
                    .measured("tangent_defect", f64::NAN)
                    .bound("upper", hessian_upper_bound(m.curvature_bound(), len))
                    .bound("closed_form", f64::NAN)
                    .finish(worst, cfg.tolerance, seconds(t)),
            );
        }
    }
    Ok((out, None))
}

fn verify_bump(spec: &JobSpec) -> Result<Output, CliError> {
    let m = model(spec)?;
    let cfg = spec.geometry;
    let deltas = spec.params.deltas.clone().unwrap_or_else(|| vec![0.1, 0.5, 1.0]);
    let eps = spec.params.eps.unwrap_or(1.0);
    let samples = spec.params.samples.unwrap_or(1000).max(1000);
    let mut out = Vec::new();
    for delta in deltas {
        let t = Instant::now();
        let b = BumpFunction::new(&m, &m.reference_point(), delta, eps)?;
        let rep = verify_bumpability_constants(&b, &cfg, samples)?;
        let certified = b.certified_bound();
        let margin = [
            1.0 - rep.estimate.sup_grad / rep.grad_bound,
            1.0 - rep.estimate.sup_hess / rep.hess_bound,
            1.0 - rep.estimate.estimate() / certified,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        out.push(
            ReportRecord::new(m.label())
                .input("delta", delta)
                .input("height", eps)
                .input("radius", rep.radius)
                .measured("center_value", rep.center_value)
                .measured("sup_value", rep.estimate.sup_value)
                .measured("sup_grad", rep.estimate.sup_grad)
                .measured("sup_hess", rep.estimate.sup_hess)
                .measured("support_violations", rep.support_violations as f64)
                .bound("grad", rep.grad_bound)
                .bound("hess", rep.hess_bound)
                .bound("certified", certified)
                .finish_with(margin, cfg.tolerance, rep.passed && rep.estimate.within_certificate(), seconds(t)),
        );
    }
    Ok((out, None))
}

fn verify_rauch(spec: &JobSpec) -> Result<Output, CliError> {
    let m = model(spec)?;
    let mt = spec
        .params
        .comparison_model
        .as_ref()
        .ok_or_else(|| CliError::Usage("missing comparison_model".into()))?
        .build()?
        .with_config(spec.geometry);
    let cfg = spec.geometry;
    let mut out = Vec::new();
    for len in spec.params.lengths.clone().unwrap_or_else(|| vec![1.0, 2.0, 3.0]) {
        let t = Instant::now();
        let rep = rauch_compare(&m, &mt, len, 1.0, &cfg)?;
        let closed = rep.closed_form_error.unwrap_or(f64::NAN);
        let margin = rep.norm_margin.min(rep.ratio_margin);
        out.push(
            ReportRecord::new(format!("{} vs {}", rep.model, rep.model_tilde))
                .input("length", len)
                .measured("max_curvature", rep.max_curvature)
                .measured("min_curvature_tilde", rep.min_curvature_tilde)
                .measured("norm_margin", rep.norm_margin)
                .measured("ratio_margin", rep.ratio_margin)
                .measured("closed_form_error", closed)
                .finish_with(margin, rep.tolerance, rep.passed == Some(true), seconds(t)),
        );
    }
    Ok((out, None))
}

/// `sin(πt/ℓ) p(t/ℓ)` in frame coordinates with random cubics `p`.
fn end_vanishing(seg: &Arc<GeodesicSegment>, rng: &mut ChaCha8Rng) -> Result<FieldAlongGeodesic, CliError> {
    let n = seg.frame(0).len();
    let len = seg.length();
    let a: Vec<[f64; 4]> = (0..n).map(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0))).collect();
    Ok(FieldAlongGeodesic::from_fn(seg.clone(), |t| {
        let s = t / len;
        let (sn, cs) = ((PI * s).sin(), (PI * s).cos());
        let mut c = DVector::zeros(n);
        let mut d = DVector::zeros(n);
        for (i, a) in a.iter().enumerate() {
            let p = a[0] + s * (a[1] + s * (a[2] + s * a[3]));
            let dp = a[1] + s * (2.0 * a[2] + s * 3.0 * a[3]);
            c[i] = sn * p;
            d[i] = (PI * cs * p + sn * dp) / len;
        }
        (c, d)
    })?)
}

const INDEX_TOLERANCE: f64 = 1e-8;
const POSITIVITY_TOLERANCE: f64 = 1e-9;

fn verify_index(spec: &JobSpec) -> Result<Output, CliError> {
    let m = model(spec)?;
    let cfg = spec.geometry;
    let ls = lengths(spec, &[0.5, 1.0, 1.4], m.safe_radius().min(m.log_radius()))?;
    let n = spec.params.samples.unwrap_or(100);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or(0));
    let z = m.reference_point();
    let mut out = Vec::new();
    for len in ls {
        let t = Instant::now();
        let (mut iyy, mut comp, mut zj, mut bz) = (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for _ in 0..n {
            let dir = m.random_unit(&z, &mut rng);
            let seg = segment(&m, &z, &dir.components, len, &cfg)?;
            let y = end_vanishing(&seg, &mut rng)?;
            iyy = iyy.min(index_form(&y, &cfg)?.value);
            let v = m.random_unit(seg.end(), &mut rng).scaled(rng.gen_range(0.2..2.0));
            let jac = jacobi_bvp(&seg, &v, &cfg)?;
            let i_j = index_form(&jac, &cfg)?.value;
            let i_c = index_form(&jac.add(&y)?, &cfg)?.value;
            let i_z = index_form(&z_field(&seg, &v)?, &cfg)?.value;
            comp = comp.min(i_c - i_j);
            zj = zj.min(i_z - i_j);
            bz = bz.min(index_form_upper_bound(&seg, &v, &m)? - i_z);
        }
        let margin = comp.min(zj).min(bz);
        out.push(
            ReportRecord::new(m.label())
                .input("length", len)
                .input("samples", n as f64)
                .measured("min_index_end_vanishing", iyy)
                .measured("min_competitor_minus_jacobi", comp)
                .measured("min_z_minus_jacobi", zj)
                .measured("min_bound_minus_z", bz)
                .finish_with(margin, INDEX_TOLERANCE, iyy >= -POSITIVITY_TOLERANCE, seconds(t)),
        );
    }
    Ok((out, None))
}

fn objective(spec: &JobSpec) -> Result<ObjectiveFunction, CliError> {
    let id = spec.params.objective.as_deref().ok_or_else(|| CliError::Usage("missing objective".into()))?;
    let f = fixtures::objective(id).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(m) = &spec.model {
        let m = m.build()?;
        if m.label() != f.model().label() {
            return Err(CliError::Usage(format!(
                "objective '{id}' lives on {}, not on {}",
                f.model().label(),
                m.label()
            )));
        }
    }
    Ok(f)
}

fn svp_options(spec: &JobSpec) -> SvpOptions {
    let defaults = SearchOptions::default();
    SvpOptions {
        search: SearchOptions {
            budget: spec.params.budget.unwrap_or(defaults.budget),
            net_size: spec.params.net_size.unwrap_or(defaults.net_size),
            seed: spec.seed.unwrap_or(0),
            ..defaults
        },
        geometry: spec.geometry,
        ..SvpOptions::default()
    }
}

fn svp(spec: &JobSpec) -> Result<Output, CliError> {
    let f = objective(spec)?;
    let opts = svp_options(spec);
    let eps = spec.params.eps.unwrap_or(0.05);
    let k_max = spec.params.k_max.unwrap_or(12);
    let t = Instant::now();
    let (phi, report) = run_svp(&f, eps, k_max, &opts)?;
    let solve = seconds(t);
    let mut out = Vec::new();
    for s in phi.provenance() {
        let c = &s.certificate;
        out.push(
            ReportRecord::new(format!("step {}", s.k))
                .input("n_k", s.n_k as f64)
                .input("eps_k", s.eps_k)
                .measured("new_value", c.new_value)
                .measured("net_inf", c.net_inf)
                .measured("exterior_inf", c.exterior_inf)
                .measured("gap_estimate", s.gap_estimate)
                .measured("net_resolution", c.net_resolution)
                .finish_with((c.net_inf - c.new_value).min(c.exterior_inf - c.net_inf), 0.0, c.passed, 0.0),
        );
    }
    for c in &report.strong_min {
        out.push(
            ReportRecord::new("strong minimum")
                .input("radius", c.radius)
                .measured("center_value", c.center_value)
                .measured("exterior_inf", c.exterior_inf)
                .measured("gap", c.gap)
                .measured("exterior_samples", c.exterior_samples as f64)
                .measured("net_resolution", c.net_resolution)
                .bound("gap", c.tolerance)
                .finish_with(c.gap - c.tolerance, 0.0, c.passed, 0.0),
        );
    }
    let t = Instant::now();
    let sample = f.region().net(f.model(), 1000, Some(opts.search.seed))?.points;
    let y = estimate_y_norm_at(&phi, &sample, &opts.geometry)?;
    out.push(
        ReportRecord::new("ledger")
            .input("eps", eps)
            .measured("ledger_total", report.y_ledger_total)
            .measured("y_norm_estimate", y.estimate())
            .bound("ledger_total", eps)
            .finish_with(
                eps - report.y_ledger_total,
                0.0,
                report.y_ledger_total < eps && y.estimate() <= report.y_ledger_total,
                solve + seconds(t),
            ),
    );
    let artifacts = json!({ "solver": report, "series": phi.spec() });
    Ok((out, Some(artifacts)))
}

fn subjet(spec: &JobSpec) -> Result<Output, CliError> {
    let f = objective(spec)?;
    let m = f.model().clone();
    let opts = svp_options(spec);
    let q = spec.params.query.as_deref().ok_or_else(|| CliError::Usage("missing query".into()))?;
    let x = m.point(q).map_err(|e| CliError::Usage(e.to_string()))?;
    let radius = spec.params.search_radius.unwrap_or(0.1);
    let eps = spec.params.eps.unwrap_or(0.05);
    let k_max = spec.params.k_max.unwrap_or(12);
    let t = Instant::now();
    let ex = extract_subjet(&f, &x, radius, eps, k_max, &opts)?;
    let z = ex.summary.element.base.clone();
    let half_width = if m.dim() == 1 { 100 } else { 10 };
    let local = witness_local_min_margin(&f, &ex.witness, &z, 1e-4, half_width)?;
    let ev = ex.summary.element.second.eigenvalues();
    let mut r = ReportRecord::new(f.label()).input("search_radius", radius).input("eps", eps);
    for (i, c) in q.iter().enumerate() {
        r = r.input(&format!("query_{i}"), *c);
    }
    for (i, c) in z.coords.iter().enumerate() {
        r = r.measured(&format!("z_{i}"), *c);
    }
    let r = r
        .measured("distance", ex.summary.distance_to_query)
        .measured("first_norm", m.tangent_norm(&ex.summary.element.first))
        .measured("second_min", ev[0])
        .measured("second_max", ev[ev.len() - 1])
        .measured("local_min_margin", local)
        .measured("attempts", ex.summary.attempts as f64)
        .bound("distance", radius)
        .finish((radius - ex.summary.distance_to_query).min(local), 0.0, seconds(t));
    Ok((vec![r], Some(json!({ "subjet": ex.summary }))))
}
