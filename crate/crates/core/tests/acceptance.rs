//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use riemsvp_core::bump::{
    estimate_y_norm_at, make_profile, scaled_bump, verify_bumpability_constants, BumpFunction, ScalarField,
    PROFILE_D1_MAX, PROFILE_D2_MAX,
};
use riemsvp_core::distsq::{hessian_upper_bound, verify_hessian_bounds, verify_lower_bound_eq8, verify_lower_bound_with};
use riemsvp_core::fixtures;
use riemsvp_core::jacobi::{index_form, index_form_upper_bound, jacobi_bvp, rauch_compare, second_variation_fd, z_field, FieldAlongGeodesic};
use riemsvp_core::svp::{
    certify_strong_minimum, extract_subjet, run_svp, witness_local_min_margin, ConfiningTerm, PerturbationSeries,
    SvpOptions,
};
use riemsvp_core::{
    GeodesicSegment, GeometryConfig, HessianForm, ManifoldModel, Point, Result, SqDistFunction, TangentVector,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn models(ids: &[&str]) -> Vec<ManifoldModel> {
    ids.iter().map(|id| fixtures::model(id).unwrap()).collect()
}

fn unit_segment(m: &ManifoldModel, x: &Point, len: f64, cfg: &GeometryConfig) -> Result<Arc<GeodesicSegment>> {
    let e = m.orthonormal_frame(x)[0].clone();
    Ok(Arc::new(GeodesicSegment::from_direction(m, &TangentVector::new(x.clone(), e), len, cfg)?))
}

/// Unit vector at the end of `seg`, orthogonal to `γ'`.
fn end_normal(seg: &GeodesicSegment, scale: f64) -> TangentVector {
    let mut c = DVector::zeros(seg.frame(0).len());
    c[1] = scale;
    seg.vector_from_frame(seg.sample_count() - 1, &c)
}

fn cot(t: f64) -> f64 {
    t.cos() / t.sin()
}

// 1 ---------------------------------------------------------------------------

fn hessian_formula_equivalence() -> Result<Outcome> {
    let m = fixtures::model("sphere2")?;
    let cfg = GeometryConfig::default();
    let x = m.reference_point();
    let (mut worst_exact, mut worst_fd) = (0.0f64, 0.0f64);
    for len in [0.2, 0.5, PI / 4.0, 1.0, 1.4] {
        let seg = unit_segment(&m, &x, len, &cfg)?;
        let v = end_normal(&seg, 1.0);
        let closed = 2.0 * len * cot(len);
        let field = jacobi_bvp(&seg, &v, &cfg)?;
        let boundary = 2.0 * len * field.end_pairing();
        let integral = 2.0 * len * index_form(&field, &cfg)?.value;
        let fd = second_variation_fd(&seg, &v, &m, &cfg)?;
        worst_exact = worst_exact.max((boundary - closed).abs()).max((integral - closed).abs());
        worst_fd = worst_fd.max((fd - closed).abs());
    }
    Ok(outcome(
        worst_exact <= 1e-6 && worst_fd <= 1e-4,
        format!("max |boundary/index - 2l cot l| = {worst_exact:.2e} (<= 1e-6), max |fd - 2l cot l| = {worst_fd:.2e} (<= 1e-4)"),
    ))
}

// 2 ---------------------------------------------------------------------------

fn hessian_two_sided_bound() -> Result<Outcome> {
    let cfg = GeometryConfig::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, m) in models(&["sphere2", "hyperbolic2", "torus2", "paraboloid"]).into_iter().enumerate() {
        let r_max = m.safe_radius().min(m.log_radius()).min(3.0);
        let center_radius = if m.is_closed_form() { 1.0 } else { 0.1 };
        let samples: Vec<(f64, f64, f64, f64)> = (0..1000u64)
            .into_par_iter()
            .map(|s| -> Result<(f64, f64, f64, f64)> {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 * i as u64 + s);
                let z = m.random_point_near(&m.reference_point(), center_radius, &mut rng)?;
                let len = r_max * (0.02 + 0.96 * rng.gen::<f64>());
                let w = m.random_unit(&z, &mut rng).scaled(len);
                let x = m.exp_map(&w)?;
                let phi = SqDistFunction::new(&m, &z, r_max * (1.0 - 1e-9))?;
                let rep = verify_hessian_bounds(&phi, &x, &cfg)?;
                let v = m.random_unit(&x, &mut rng);
                let h = &rep.hessian;
                let q = h.quadratic(&m, &v)?;
                let bound = hessian_upper_bound(m.curvature_bound(), rep.length);
                Ok((rep.lower_margin, rep.upper_margin, q, bound - q))
            })
            .collect::<Result<_>>()?;
        let lower = samples.iter().map(|s| s.0.min(s.2)).fold(f64::INFINITY, f64::min);
        let upper = samples.iter().map(|s| s.1.min(s.3)).fold(f64::INFINITY, f64::min);
        ok &= lower >= -1e-9 && upper >= -1e-9;
        lines.push(format!("{}: min lambda {lower:.3e}, min bound margin {upper:.3e}", m.label()));
    }
    Ok(outcome(ok, format!("1000 samples/model; {}", lines.join("; "))))
}

// 3 ---------------------------------------------------------------------------

fn lower_bound_comparison() -> Result<Outcome> {
    let cfg = GeometryConfig::default();
    let sphere = fixtures::model("sphere2")?;
    let z = sphere.reference_point();
    let mut eq = 0.0f64;
    for len in [0.2, 0.5, PI / 4.0, 1.0, 1.4] {
        for scale in [0.3, 1.0, 2.0] {
            let seg = unit_segment(&sphere, &z, len, &cfg)?;
            let phi = SqDistFunction::with_max_radius(&sphere, &z)?;
            let rep = verify_lower_bound_eq8(&phi, seg.end(), &end_normal(&seg, scale), &cfg)?;
            eq = eq.max(rep.margin.abs());
            // closed form: cot ℓ ‖v‖²
            eq = eq.max((rep.pairing - cot(len) * scale * scale).abs());
        }
    }
    let mut strict = f64::INFINITY;
    let mut flat_equality = 0.0f64;
    for (id, lens) in [("hyperbolic2", vec![0.3, 1.0, 1.5]), ("euclidean2", vec![0.3, 1.0, 1.5]), ("torus2", vec![0.3, 1.0, 1.5])] {
        let m = fixtures::model(id)?;
        let z = m.reference_point();
        let phi = SqDistFunction::with_max_radius(&m, &z)?;
        for len in lens {
            let seg = unit_segment(&m, &z, len, &cfg)?;
            let v = end_normal(&seg, 1.0);
            if id == "hyperbolic2" {
                strict = strict.min(verify_lower_bound_eq8(&phi, seg.end(), &v, &cfg)?.margin);
            } else {
                // zero curvature meets the K₀ = 0 comparison with equality; K₀ = 1 is also a valid bound
                flat_equality = flat_equality.max(verify_lower_bound_eq8(&phi, seg.end(), &v, &cfg)?.margin.abs());
                strict = strict.min(verify_lower_bound_with(&phi, seg.end(), &v, 1.0, &cfg)?.margin);
            }
        }
    }
    Ok(outcome(
        eq <= 1e-8 && strict > 0.0 && flat_equality <= 1e-8,
        format!(
            "sphere |<X',X> - cot l |v|^2| <= {eq:.2e}; hyperbolic/flat min margin {strict:.3e} > 0; flat K0=0 equality {flat_equality:.1e}"
        ),
    ))
}

// 4 ---------------------------------------------------------------------------

/// `Y(t) = sin(πt/ℓ) p(t/ℓ)` in frame coordinates, `p` a random cubic per coordinate.
fn random_end_vanishing(seg: &Arc<GeodesicSegment>, rng: &mut ChaCha8Rng) -> Result<FieldAlongGeodesic> {
    let n = seg.frame(0).len();
    let len = seg.length();
    let coeffs: Vec<[f64; 4]> = (0..n)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0)))
        .collect();
    FieldAlongGeodesic::from_fn(seg.clone(), |t| {
        let s = t / len;
        let (sn, cs) = ((PI * s).sin(), (PI * s).cos());
        let mut c = DVector::zeros(n);
        let mut d = DVector::zeros(n);
        for (i, a) in coeffs.iter().enumerate() {
            let p = a[0] + s * (a[1] + s * (a[2] + s * a[3]));
            let dp = a[1] + s * (2.0 * a[2] + s * 3.0 * a[3]);
            c[i] = sn * p;
            d[i] = (PI * cs * p + sn * dp) / len;
        }
        (c, d)
    })
}

fn index_form_minimality() -> Result<Outcome> {
    let cfg = GeometryConfig {
        ode_step: 2e-3,
        ..Default::default()
    };
    let ms = models(&["sphere2", "hyperbolic2", "paraboloid"]);
    let min_iyy = (0..1000u64)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(40_000 + s);
            let m = &ms[(s % 3) as usize];
            let len = rng.gen_range(0.1..0.95) * m.safe_radius().min(1.5);
            let x = if m.is_closed_form() {
                m.random_point_near(&m.reference_point(), 0.5, &mut rng)?
            } else {
                m.reference_point()
            };
            let dir = m.random_unit(&x, &mut rng);
            let seg = Arc::new(GeodesicSegment::from_direction(m, &dir, len, &cfg)?);
            let y = random_end_vanishing(&seg, &mut rng)?;
            Ok(index_form(&y, &cfg)?.value)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    let rows = (0..100u64)
        .into_par_iter()
        .map(|s| -> Result<(f64, f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(50_000 + s);
            let m = &ms[(s % 3) as usize];
            let len = rng.gen_range(0.1..0.95) * m.safe_radius().min(1.5);
            let x = m.reference_point();
            let dir = m.random_unit(&x, &mut rng);
            let seg = Arc::new(GeodesicSegment::from_direction(m, &dir, len, &cfg)?);
            let v = m.random_unit(seg.end(), &mut rng).scaled(rng.gen_range(0.2..2.0));
            let jac = jacobi_bvp(&seg, &v, &cfg)?;
            let i_j = index_form(&jac, &cfg)?.value;
            let comp = jac.add(&random_end_vanishing(&seg, &mut rng)?)?;
            let i_c = index_form(&comp, &cfg)?.value;
            let i_z = index_form(&z_field(&seg, &v)?, &cfg)?.value;
            let bound = index_form_upper_bound(&seg, &v, m)?;
            Ok((i_c - i_j, i_z - i_j, bound - i_z))
        })
        .collect::<Result<Vec<_>>>()?;
    let fold = |f: fn(&(f64, f64, f64)) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
    let (comp, z, b) = (fold(|r| r.0), fold(|r| r.1), fold(|r| r.2));
    Ok(outcome(
        min_iyy >= -1e-9 && comp >= -1e-8 && z >= -1e-8 && b >= -1e-8,
        format!(
            "min I(Y,Y) = {min_iyy:.3e} over 1000 fields; min I(C)-I(J) = {comp:.3e}, min I(Z)-I(J) = {z:.3e}, min bound-I(Z) = {b:.3e} over 100"
        ),
    ))
}

// 5 ---------------------------------------------------------------------------

fn rauch_comparison() -> Result<Outcome> {
    let cfg = GeometryConfig::default();
    let mut ok = true;
    let mut lines = Vec::new();
    for (a, b, len) in [("euclidean2", "sphere2", 3.0), ("hyperbolic2", "euclidean2", 3.0)] {
        let (m, mt) = (fixtures::model(a)?, fixtures::model(b)?);
        let rep = rauch_compare(&m, &mt, len, 1.0, &cfg)?;
        let closed = rep.closed_form_error.unwrap_or(f64::INFINITY);
        let pass = rep.passed == Some(true)
            && rep.norm_margin >= -1e-7
            && rep.ratio_margin >= -1e-7
            && closed <= 1e-8
            && rep.samples.len() >= 10;
        ok &= pass;
        lines.push(format!(
            "({a}, {b}) norm margin {:.2e}, ratio margin {:.2e}, closed-form err {closed:.1e}",
            rep.norm_margin, rep.ratio_margin
        ));
    }
    Ok(outcome(ok, lines.join("; ")))
}

// 6 ---------------------------------------------------------------------------

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b))
}

/// Dense grid maximum of `f` on `[0, t_max]`, polished by golden-section search.
fn grid_max(f: impl Fn(f64) -> f64 + Copy, t_max: f64) -> f64 {
    let n = 100_000;
    let h = t_max / n as f64;
    let (i, _) = (0..=n)
        .map(|i| (i, f(i as f64 * h)))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let lo = (i as f64 - 1.0).max(0.0) * h;
    let hi = ((i + 1) as f64 * h).min(t_max);
    golden_max(f, lo, hi)
}

fn bumpability_constants() -> Result<Outcome> {
    let cfg = GeometryConfig::default();
    let mut ok = true;
    let mut profile_err = 0.0f64;
    for delta in [0.1, 0.5, 1.0] {
        let p = make_profile(delta)?;
        let d1 = grid_max(|t| p.eval(t).1.abs(), delta * delta);
        let d2 = grid_max(|t| p.eval(t).2.abs(), delta * delta);
        profile_err = profile_err
            .max((d1 - 1.875 / delta.powi(2)).abs())
            .max((d2 - 10.0 / 3f64.sqrt() / delta.powi(4)).abs());
        ok &= d1 <= 3.0 / delta.powi(2) && d2 <= 10.0 / delta.powi(4);
    }
    ok &= profile_err <= 1e-6 && PROFILE_D1_MAX <= 3.0 && PROFILE_D2_MAX <= 10.0;

    let mut cases = 0;
    let mut worst_grad: f64 = 0.0;
    let mut worst_hess: f64 = 0.0;
    for m in models(&["sphere2", "hyperbolic2", "torus2", "euclidean2", "paraboloid"]) {
        let r = m.bumpability_radius();
        for delta in [0.1, 0.5, 0.9 * r] {
            if delta >= r {
                continue;
            }
            let b = BumpFunction::new(&m, &m.reference_point(), delta, 0.7)?;
            let rep = verify_bumpability_constants(&b, &cfg, 1000)?;
            cases += 1;
            ok &= rep.passed && rep.estimate.within_certificate();
            worst_grad = worst_grad.max(rep.estimate.sup_grad / rep.grad_bound);
            worst_hess = worst_hess.max(rep.estimate.sup_hess / rep.hess_bound);
        }
    }
    Ok(outcome(
        ok,
        format!(
            "profile maxima err {profile_err:.1e}; {cases} model/delta cases, max sup|db|/(6e/d) = {worst_grad:.3}, max sup|d2b|/(Re/d^2) = {worst_hess:.3}"
        ),
    ))
}

// 7 ---------------------------------------------------------------------------

fn variational_principle() -> Result<Outcome> {
    let f = fixtures::objective("two-well")?;
    let m = f.model().clone();
    let opts = SvpOptions::default();
    let (a, b) = fixtures::two_well_points(&m);

    // unperturbed: two minima at value 0, so no strong minimum
    let none = PerturbationSeries::new(&m, 0.05)?;
    let before = certify_strong_minimum(&f, &none, &a, &opts)?;
    let tie = before.iter().all(|c| !c.passed) && f.eval(&a) == 0.0 && f.eval(&b) == 0.0;

    let (phi, report) = run_svp(&f, 0.05, 12, &opts)?;
    let mut sample = f.region().net(&m, 2000, Some(7))?.points;
    for c in &report.centers {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            sample.push(m.random_point_near(c, 0.6, &mut rng)?);
        }
    }
    let y = estimate_y_norm_at(&phi, &sample, &opts.geometry)?;
    let at_well = m.distance(&report.minimizer, &a)?.min(m.distance(&report.minimizer, &b)?);
    let gaps: Vec<String> = report
        .strong_min
        .iter()
        .map(|c| format!("rho {} gap {:.3e}", c.radius, c.gap))
        .collect();
    let radii_ok = report.strong_min.iter().map(|c| c.radius).collect::<Vec<_>>() == vec![0.1, 0.05];
    let pass = tie
        && report.y_ledger_total < 0.05
        && y.sup_value < 0.05
        && y.sup_grad < 0.05
        && y.sup_hess < 0.05
        && radii_ok
        && report.strongly_certified()
        && report.strong_min.iter().all(|c| c.gap > 0.0)
        && report.strong_min[0].net_size >= 16 * opts.search.net_size
        && at_well < 1e-6;
    Ok(outcome(
        pass,
        format!(
            "ledger {:.3e}; sampled |phi| {:.2e}, |dphi| {:.2e}, |d2phi| {:.2e}; minimizer {:.1e} from a well; {}",
            report.y_ledger_total,
            y.sup_value,
            y.sup_grad,
            y.sup_hess,
            at_well,
            gaps.join(", ")
        ),
    ))
}

// 8 ---------------------------------------------------------------------------

fn subjet_density() -> Result<Outcome> {
    let opts = SvpOptions::default();
    let mut ok = true;
    let mut lines = Vec::new();
    for (id, x0) in [("abs-1d", 0.3), ("abs-1d", 0.0), ("lsc-step", 0.0)] {
        let f = fixtures::objective(id)?;
        let x = f.model().point(&[x0])?;
        let ex = extract_subjet(&f, &x, 0.1, 0.05, 12, &opts)?;
        let z = &ex.summary.element.base;
        let margin = witness_local_min_margin(&f, &ex.witness, z, 1e-4, 100)?;
        let lower_branch = id != "lsc-step" || z.coords[0] <= 0.0;
        let pass = ex.summary.distance_to_query <= 0.1 && margin >= 0.0 && lower_branch;
        ok &= pass;
        lines.push(format!(
            "{id} at {x0}: z = {:.6}, margin {margin:.2e}",
            z.coords[0]
        ));
    }
    Ok(outcome(ok, lines.join("; ")))
}

// 9 ---------------------------------------------------------------------------

const GRAD_STEP: f64 = 1e-5;
const HESS_STEP: f64 = 1e-4;

/// Worst mixed error `|a - b| / max(1, |b|)` of `<∇f, v>` and `Hf(v, v)` against
/// central differences along `s ↦ exp_x(s v)` for unit `v`, Richardson-extrapolated
/// from steps `h` and `2h` so the steep bump profiles do not dominate with their `h²` term.
fn fd_defect(
    m: &ManifoldModel,
    value: &(dyn Fn(&Point) -> Result<f64> + Sync),
    grad: &(dyn Fn(&Point) -> Result<TangentVector> + Sync),
    hess: &(dyn Fn(&Point) -> Result<HessianForm> + Sync),
    points: &[(Point, TangentVector)],
) -> Result<(f64, f64)> {
    let rows = points
        .par_iter()
        .map(|(x, v)| -> Result<(f64, f64)> {
            let at = |s: f64| -> Result<f64> { value(&m.exp_map(&v.scaled(s))?) };
            let g = m.tangent_inner(&grad(x)?, v)?;
            let first = |h: f64| -> Result<f64> { Ok((at(h)? - at(-h)?) / (2.0 * h)) };
            let f0 = value(x)?;
            let second = |h: f64| -> Result<f64> { Ok((at(h)? - 2.0 * f0 + at(-h)?) / (h * h)) };
            let g_fd = (4.0 * first(GRAD_STEP)? - first(2.0 * GRAD_STEP)?) / 3.0;
            let h = hess(x)?.quadratic(m, v)?;
            let h_fd = (4.0 * second(HESS_STEP)? - second(2.0 * HESS_STEP)?) / 3.0;
            Ok(((g - g_fd).abs() / g_fd.abs().max(1.0), (h - h_fd).abs() / h_fd.abs().max(1.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.iter().fold((0.0f64, 0.0f64), |a, r| (a.0.max(r.0), a.1.max(r.1))))
}

fn random_points(m: &ManifoldModel, center: &Point, radius: f64, count: usize, seed: u64) -> Result<Vec<(Point, TangentVector)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = m.random_point_near(center, radius, &mut rng)?;
            let v = m.random_unit(&x, &mut rng);
            Ok((x, v))
        })
        .collect()
}

/// Like [`random_points`], redrawing points within `4h` of a sphere `d(·, c) = r` across which
/// the field is only C², so every difference stencil stays where the field is smooth.
fn smooth_points(
    m: &ManifoldModel,
    center: &Point,
    radius: f64,
    count: usize,
    seed: u64,
    spheres: &[(Point, f64)],
) -> Result<Vec<(Point, TangentVector)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = m.random_point_near(center, radius, &mut rng)?;
        let v = m.random_unit(&x, &mut rng);
        let mut clear = true;
        for (c, r) in spheres {
            clear &= (m.distance(c, &x)? - r).abs() > 4.0 * HESS_STEP;
        }
        if clear {
            out.push((x, v));
        }
    }
    Ok(out)
}

fn rk4_order(m: &ManifoldModel) -> Result<f64> {
    let c = m.chart_metric().expect("chart model");
    let mut worst = f64::INFINITY;
    for (x, v) in [([0.1, -0.2], [0.5, 0.3]), ([0.0, 0.0], [0.7, 0.0]), ([-0.3, 0.2], [0.2, -0.6])] {
        let (x, v) = (DVector::from_row_slice(&x), DVector::from_row_slice(&v));
        let run = |n: usize| c.integrate_geodesic(&x, &v, n);
        let (a, b, d) = (run(8)?, run(16)?, run(32)?);
        let order = ((&a - &b).norm() / (&b - &d).norm()).log2();
        worst = worst.min(order);
    }
    Ok(worst)
}

fn numerical_hygiene() -> Result<Outcome> {
    let cfg = GeometryConfig::default();
    let mut worst = (0.0f64, 0.0f64);
    let mut lines = Vec::new();
    let mut track = |name: &str, d: (f64, f64)| {
        worst = (worst.0.max(d.0), worst.1.max(d.1));
        lines.push(format!("{name} {:.1e}/{:.1e}", d.0, d.1));
    };
    for m in models(&["sphere2", "hyperbolic2", "torus2", "euclidean2", "paraboloid"]) {
        let o = m.reference_point();
        let chart = !m.is_closed_form();
        let reach = if chart { 0.3 } else { 1.0 };
        let n = if chart { 200 } else { 1000 };

        let z = m.point(if chart { &[0.05, -0.05] } else { &[0.1, 0.2] })?;
        let sq = SqDistFunction::with_max_radius(&m, &z)?;
        let pts: Vec<_> = random_points(&m, &z, reach, n, 90)?
            .into_iter()
            .filter(|(x, _)| sq.distance(x).is_ok_and(|d| d > 0.05))
            .collect();
        track(
            &format!("{} d^2", m.label()),
            fd_defect(&m, &|x| sq.value(x), &|x| sq.gradient(x), &|x| sq.hessian(x, &cfg), &pts)?,
        );

        let delta = 0.5f64.min(0.9 * m.bumpability_radius());
        let b = scaled_bump(&o, delta, 0.3, &m)?;
        let pts = smooth_points(&m, &o, 1.2 * delta, n, 91, &[(o.clone(), delta)])?;
        track(
            &format!("{} bump", m.label()),
            fd_defect(&m, &|x| b.value(x), &|x| b.gradient(x), &|x| b.hessian(x, &cfg), &pts)?,
        );

        if chart {
            continue;
        }
        let mut series = PerturbationSeries::new(&m, 1000.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(92);
        let mut supports = Vec::new();
        for (k, d) in [0.6, 0.45, 0.3].into_iter().enumerate() {
            let c = m.random_point_near(&o, 0.2, &mut rng)?;
            series.push(scaled_bump(&c, d, 0.1 / (k + 1) as f64, &m)?)?;
            supports.push((c, d));
        }
        let pts = smooth_points(&m, &o, 0.8, n, 93, &supports)?;
        track(
            &format!("{} series", m.label()),
            fd_defect(&m, &|x| series.value(x), &|x| series.gradient(x), &|x| series.hessian(x, &cfg), &pts)?,
        );

        let conf = ConfiningTerm::new(&m, &o, 0.4, 1.5)?;
        let pts = smooth_points(&m, &o, 0.5, n, 94, &[(o.clone(), 0.2), (o.clone(), 0.4)])?;
        track(
            &format!("{} confinement", m.label()),
            fd_defect(&m, &|x| conf.value(x), &|x| conf.gradient(x), &|x| conf.hessian(x, &cfg), &pts)?,
        );
    }
    let order = rk4_order(&fixtures::model("paraboloid")?)?;
    Ok(outcome(
        worst.0 <= 1e-5 && worst.1 <= 1e-5 && order >= 3.5,
        format!(
            "max grad/hess FD defect {:.1e}/{:.1e}; RK4 order {order:.2} ({})",
            worst.0,
            worst.1,
            lines.join(", ")
        ),
    ))
}

type Criterion = (&'static str, fn() -> Result<Outcome>, Option<Duration>);

fn main() {
    let criteria: [Criterion; 9] = [
        ("hessian formula equivalence", hessian_formula_equivalence, Some(Duration::from_secs(10))),
        ("two-sided squared-distance Hessian bound", hessian_two_sided_bound, Some(Duration::from_secs(120))),
        ("Jacobi end-pairing comparison", lower_bound_comparison, None),
        ("index form positivity and minimality", index_form_minimality, None),
        ("Rauch comparison", rauch_comparison, None),
        ("bumpability constants", bumpability_constants, None),
        ("smooth variational principle", variational_principle, Some(Duration::from_secs(60))),
        ("subjet density", subjet_density, None),
        ("numerical hygiene", numerical_hygiene, None),
    ];
    // optional criterion numbers select a subset
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let start = Instant::now();
        let res = run();
        let elapsed = start.elapsed();
        let (passed, detail) = match res {
            Ok(o) => {
                let in_time = limit.is_none_or(|l| elapsed <= l);
                let note = match limit {
                    Some(l) if !in_time => format!("{}; exceeded {:?}", o.detail, l),
                    _ => o.detail,
                };
                (o.passed && in_time, note)
            }
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "{} [{}] {name}: {detail} ({:.2}s)",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
