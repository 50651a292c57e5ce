use riemsvp_core::bump::{estimate_y_norm_at, ScalarField};
use riemsvp_core::fixtures;
use riemsvp_core::svp::{
    certify_strong_minimum, extract_subjet, PerturbationSeries, recheck_step_certificates, run_svp, witness_local_min_margin, SvpOptions,
};

#[test]
fn two_well_gets_a_strong_minimum() {
    let f = fixtures::objective("two-well").unwrap();
    let opts = SvpOptions::default();
    let t = std::time::Instant::now();
    let (phi, report) = run_svp(&f, 0.05, 12, &opts).unwrap();
    eprintln!("run {:?}", t.elapsed());
    eprintln!("{:#?}", report.strong_min);
    assert!(report.strongly_certified());
    assert!(report.y_ledger_total < 0.05);
    for w in report.values.windows(2) {
        assert!(w[1] <= w[0]);
    }
    for (k, pair) in report.centers.windows(2).enumerate() {
        let d = f.model().distance(&pair[0], &pair[1]).unwrap();
        let bound = phi.bumps()[k].delta() + phi.bumps()[k + 1].delta();
        assert!(d <= bound, "step {k}: {d} > {bound}");
    }
    let t = std::time::Instant::now();
    let checks = recheck_step_certificates(&f, &phi, &opts).unwrap();
    eprintln!("recheck {:?}", t.elapsed());
    assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
    let pts = f.region().net(f.model(), 500, None).unwrap().points;
    let y = estimate_y_norm_at(&phi, &pts, &opts.geometry).unwrap();
    assert!(y.estimate() < 0.05);
}

#[test]
fn zero_function_is_not_certified() {
    let f = fixtures::objective("zero-sphere").unwrap();
    let opts = SvpOptions::default();
    let phi = PerturbationSeries::new(f.model(), 0.1).unwrap();
    let x = f.model().reference_point();
    let certs = certify_strong_minimum(&f, &phi, &x, &opts).unwrap();
    assert_eq!(certs.len(), 2);
    assert!(certs.iter().all(|c| !c.passed && c.gap == 0.0));
}

#[test]
fn zero_function_gets_a_strong_minimum_after_one_bump() {
    let f = fixtures::objective("zero-sphere").unwrap();
    let (phi, report) = run_svp(&f, 0.1, 1, &SvpOptions::default()).unwrap();
    assert_eq!(phi.len(), 1);
    assert!(report.y_ledger_total < 0.1);
    assert!(report.strongly_certified(), "{:?}", report.strong_min);
    assert!(f.model().same_point(&report.minimizer, phi.bumps()[0].center(), 1e-12));
}

#[test]
fn subjets_are_local_minima_of_the_witness() {
    let opts = SvpOptions::default();
    for (id, x0) in [("abs-1d", 0.3), ("abs-1d", 0.0), ("lsc-step", 0.0)] {
        let f = fixtures::objective(id).unwrap();
        let x = f.model().point(&[x0]).unwrap();
        let ex = extract_subjet(&f, &x, 0.1, 0.05, 12, &opts).unwrap();
        let z = &ex.summary.element.base;
        let m = witness_local_min_margin(&f, &ex.witness, z, 1e-4, 50).unwrap();
        eprintln!("{id} {x0}: z = {} margin {m:e} first {:?}", z.coords[0], ex.summary.element.first.components);
        assert!(m >= -1e-12);
        let _ = ex.witness.value(z).unwrap();
    }
}

mod plumbing {
    use std::sync::Arc;

    use riemsvp_core::bump::{bumpability_constant, scaled_bump, ScalarField};
    use riemsvp_core::svp::{
        approximate_min_search, evaluate_perturbed, extract_subjet, run_svp, svp_step, ObjectiveFunction,
        PerturbationSeries, SearchOptions, SvpOptions,
    };
    use riemsvp_core::{fixtures, make_model, Error, GeometryConfig, ModelKind, Point, Region};

    fn search_opts() -> SearchOptions {
        SearchOptions {
            budget: 1000,
            net_size: 400,
            ..Default::default()
        }
    }

    #[test]
    fn search_finds_the_disc_center() {
        let m = make_model(ModelKind::Euclidean { dim: 2 }).unwrap();
        let region = Region::ball(m.reference_point(), 1.0);
        let h = |x: &Point| x.coords.norm_squared();
        let r = approximate_min_search(&h, &m, &region, &[], &[], &search_opts()).unwrap();
        assert!(r.x_best.coords.norm() < 1e-3);
        assert!(r.evaluations <= 1000 + 10);
    }

    #[test]
    fn search_finds_the_sphere_center() {
        let m = fixtures::model("sphere2").unwrap();
        let p = m.point(&[0.2, -0.1]).unwrap();
        let region = Region::ball(m.reference_point(), 1.2);
        let mm = m.clone();
        let pp = p.clone();
        let h = move |x: &Point| mm.distance(x, &pp).unwrap().powi(2);
        let r = approximate_min_search(&h, &m, &region, &[], &[], &search_opts()).unwrap();
        assert!(m.distance(&r.x_best, &p).unwrap() < 1e-3);
    }

    #[test]
    fn constant_search_has_zero_gap_and_is_deterministic() {
        let m = fixtures::model("sphere2").unwrap();
        let region = Region::ball(m.reference_point(), 1.0);
        let h = |_: &Point| 3.0;
        let a = approximate_min_search(&h, &m, &region, &[], &[], &search_opts()).unwrap();
        let b = approximate_min_search(&h, &m, &region, &[], &[], &search_opts()).unwrap();
        assert_eq!(a.gap_estimate, 0.0);
        assert_eq!(a.x_best, b.x_best);
        assert_eq!(a.x_best, a.net_points[0]);
    }

    #[test]
    fn search_rejects_small_budgets_and_empty_domains() {
        let m = fixtures::model("euclidean1").unwrap();
        let region = Region::interval(-1.0, 1.0);
        let h = |_: &Point| f64::INFINITY;
        let small = SearchOptions {
            budget: 99,
            ..search_opts()
        };
        assert!(matches!(
            approximate_min_search(&h, &m, &region, &[], &[], &small),
            Err(Error::InvalidParameter(_))
        ));
        assert_eq!(
            approximate_min_search(&h, &m, &region, &[], &[], &search_opts()).unwrap_err(),
            Error::EmptyDomain
        );
    }

    fn one_d_two_well() -> ObjectiveFunction {
        let m = fixtures::model("euclidean1").unwrap();
        let f = |x: &Point| {
            let t = x.coords[0];
            ((t - 1.0).powi(2)).min((t + 1.0).powi(2))
        };
        ObjectiveFunction::new("1d-two-well", &m, Region::interval(-2.0, 2.0), 0.0, Arc::new(f)).unwrap()
    }

    /// Brute-force minimum of `h` on a fine grid of [-2, 2].
    fn enumerate(h: impl Fn(f64) -> f64) -> (f64, f64) {
        (0..=400_000)
            .map(|i| -2.0 + 4.0 * i as f64 / 400_000.0)
            .map(|t| (t, h(t)))
            .fold((f64::NAN, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }

    #[test]
    fn first_step_lands_on_a_well() {
        let f = one_d_two_well();
        let m = f.model().clone();
        let c = bumpability_constant(&m);
        let eps_1 = 0.05 / (4.0 * c * 7.0);
        let phi = PerturbationSeries::new(&m, 0.05).unwrap();
        let next = svp_step(&f, &phi, 1, 2, eps_1, &SvpOptions::default()).unwrap();
        let step = &next.provenance()[0];
        let x1 = step.center.coords[0];
        assert!(((x1.abs() - 1.0).abs()) < 1e-6, "{x1}");
        assert!(step.certificate.passed);
        assert!(step.certificate.gap() > 0.0);
        let (t, v) = enumerate(|t| f.eval(&m.point(&[t]).unwrap()) - next.value(&m.point(&[t]).unwrap()).unwrap());
        assert!((t - x1).abs() < 1e-4);
        assert!(v >= step.certificate.new_value - 1e-12);
    }

    #[test]
    fn strict_minimum_is_deepened_in_place() {
        let m = fixtures::model("euclidean1").unwrap();
        let f = ObjectiveFunction::new("bowl", &m, Region::interval(-1.0, 1.0), 0.0, Arc::new(|x: &Point| x.coords[0].powi(2)))
            .unwrap();
        let (phi, report) = run_svp(&f, 0.05, 3, &SvpOptions::default()).unwrap();
        for b in phi.bumps() {
            assert!(b.center().coords[0].abs() < 1e-5);
        }
        assert!(report.strongly_certified());
    }

    #[test]
    fn ledger_entry_arithmetic() {
        let m = fixtures::model("sphere2").unwrap();
        let b = scaled_bump(&m.reference_point(), 0.25, 1e-4, &m).unwrap();
        assert!((bumpability_constant(&m) - 48.0).abs() < 1e-12);
        assert!((b.certified_bound() - 48e-4 * 21.0).abs() < 1e-12);
        let mut s = PerturbationSeries::new(&m, 0.1).unwrap();
        assert!(matches!(s.push(b.clone()), Err(Error::Precondition(_))));
        let mut s2 = PerturbationSeries::new(&m, 0.2).unwrap();
        s2.push(b.clone()).unwrap();
        // radii must strictly decrease
        assert!(s2.push(b).is_err());
        assert!(s.is_empty());
    }

    #[test]
    fn ledger_is_linear_in_eps() {
        let f = fixtures::objective("abs-1d").unwrap();
        let opts = SvpOptions::default();
        let (_, a) = run_svp(&f, 0.05, 4, &opts).unwrap();
        let (_, b) = run_svp(&f, 0.025, 4, &opts).unwrap();
        assert!((a.y_ledger_total - 2.0 * b.y_ledger_total).abs() < 1e-15);
        assert!(a.y_ledger_total < 0.05);
        assert!(!run_svp(&f, 0.05, 4, &SvpOptions { localization_target: Some(1e-3), ..opts }).unwrap().1.complete);
    }

    #[test]
    fn perturbed_evaluation_sums_bumps() {
        let f = fixtures::objective("zero-sphere").unwrap();
        let m = f.model().clone();
        let cfg = GeometryConfig::default();
        let x = m.point(&[0.05, 0.02]).unwrap();
        let empty = PerturbationSeries::new(&m, 1.0).unwrap();
        let e = evaluate_perturbed(&f, &empty, &x, &cfg).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.gradient.components.norm(), 0.0);
        assert_eq!(e.hessian.operator_norm(), 0.0);

        let b1 = scaled_bump(&m.reference_point(), 0.5, 1e-3, &m).unwrap();
        let b2 = scaled_bump(&m.point(&[0.1, 0.0]).unwrap(), 0.4, 1e-4, &m).unwrap();
        let mut s = PerturbationSeries::new(&m, 1.0).unwrap();
        s.push(b1.clone()).unwrap();
        s.push(b2.clone()).unwrap();
        let e = evaluate_perturbed(&f, &s, &x, &cfg).unwrap();
        let direct = b1.value(&x).unwrap() + b2.value(&x).unwrap();
        assert!((e.value + direct).abs() < 1e-12);
        let g = b1.gradient(&x).unwrap().components + b2.gradient(&x).unwrap().components;
        assert!((e.gradient.components - g).amax() < 1e-12);
        let h = b1.hessian(&x, &cfg).unwrap().matrix + b2.hessian(&x, &cfg).unwrap().matrix;
        assert!((e.hessian.matrix - h).amax() < 1e-12);

        let far = m.point(&[0.0, -0.9]).unwrap();
        let e = evaluate_perturbed(&f, &s, &far, &cfg).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.hessian.operator_norm(), 0.0);
    }

    #[test]
    fn smooth_minimum_is_its_own_subjet() {
        let m = fixtures::model("euclidean1").unwrap();
        let f = ObjectiveFunction::new(
            "bowl",
            &m,
            Region::interval(-1.0, 1.0),
            0.0,
            Arc::new(|x: &Point| (x.coords[0] - 0.3).powi(2)),
        )
        .unwrap();
        let x = m.point(&[0.3]).unwrap();
        let ex = extract_subjet(&f, &x, 0.1, 0.05, 6, &SvpOptions::default()).unwrap();
        assert!(ex.summary.distance_to_query < 1e-5);
        assert!(ex.summary.element.first.components.norm() < 1e-4);
        assert_eq!(ex.summary.attempts, 1);
    }

    #[test]
    fn subjet_needs_a_finite_query_value() {
        let m = fixtures::model("euclidean1").unwrap();
        let f = ObjectiveFunction::new(
            "half",
            &m,
            Region::interval(-1.0, 1.0),
            0.0,
            Arc::new(|x: &Point| if x.coords[0] < 0.0 { f64::INFINITY } else { 0.0 }),
        )
        .unwrap();
        let x = m.point(&[-0.5]).unwrap();
        assert!(matches!(
            extract_subjet(&f, &x, 0.1, 0.05, 2, &SvpOptions::default()),
            Err(Error::Precondition(_))
        ));
    }
}
