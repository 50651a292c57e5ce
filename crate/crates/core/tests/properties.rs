use proptest::prelude::*;

use riemsvp_core::bump::ScalarField;
use riemsvp_core::distsq::verify_hessian_bounds;
use riemsvp_core::svp::step_schedule;
use riemsvp_core::{fixtures, BumpFunction, GeometryConfig, PerturbationSeries, SqDistFunction};

fn closed_form_model() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["sphere2", "hyperbolic2", "torus2", "euclidean2"])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_inverts_exp(id in closed_form_model(), p in prop::array::uniform2(-1.0..1.0f64),
                       w in prop::array::uniform2(-1.0..1.0f64), scale in 0.01..0.95f64) {
        let m = fixtures::model(id).unwrap();
        let x = m.exp_map(&m.tangent(&m.reference_point(), &p)).unwrap();
        let w = m.tangent(&x, &w);
        let n = m.tangent_norm(&w);
        prop_assume!(n > 1e-6);
        let v = w.scaled(scale * m.safe_radius().min(2.0) / n);
        let y = m.exp_map(&v).unwrap();
        let back = m.align(&x, &m.log_map(&x, &y).unwrap()).unwrap();
        let v = m.align(&x, &v).unwrap();
        prop_assert!((back.components - v.components).amax() < 1e-9);
    }

    #[test]
    fn distance_is_a_metric(p in prop::array::uniform2(-0.5..0.5f64), q in prop::array::uniform2(-0.5..0.5f64),
                            r in prop::array::uniform2(-0.5..0.5f64)) {
        let m = fixtures::model("sphere2").unwrap();
        let o = m.reference_point();
        let [a, b, c] = [p, q, r].map(|c| m.exp_map(&m.tangent(&o, &c)).unwrap());
        let (ab, ba) = (m.distance(&a, &b).unwrap(), m.distance(&b, &a).unwrap());
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ab <= m.distance(&a, &c).unwrap() + m.distance(&c, &b).unwrap() + 1e-12);
        prop_assert!(m.distance(&a, &a).unwrap() < 1e-12);
    }

    #[test]
    fn sq_dist_hessian_stays_between_zero_and_the_bound(id in closed_form_model(),
                                                        w in prop::array::uniform2(-1.0..1.0f64), frac in 0.02..0.98f64) {
        let cfg = GeometryConfig::default();
        let m = fixtures::model(id).unwrap();
        let z = m.reference_point();
        let w = m.tangent(&z, &w);
        let n = m.tangent_norm(&w);
        prop_assume!(n > 1e-6);
        let r = m.safe_radius().min(m.log_radius()).min(3.0);
        let x = m.exp_map(&w.scaled(frac * r / n)).unwrap();
        let phi = SqDistFunction::with_max_radius(&m, &z).unwrap();
        let rep = verify_hessian_bounds(&phi, &x, &cfg).unwrap();
        prop_assert!(rep.passed, "{rep:?}");
        prop_assert!(rep.tangent_defect < 1e-6);
    }

    #[test]
    fn bumps_are_bounded_and_compactly_supported(delta in 0.05..0.9f64, eps in 0.01..2.0f64,
                                                 c in prop::array::uniform2(-1.5..1.5f64)) {
        let m = fixtures::model("sphere2").unwrap();
        let z = m.reference_point();
        let b = BumpFunction::new(&m, &z, delta, eps).unwrap();
        let x = m.exp_map(&m.tangent(&z, &c)).unwrap();
        let v = b.value(&x).unwrap();
        prop_assert!((0.0..=eps).contains(&v));
        if m.distance(&z, &x).unwrap() >= delta {
            prop_assert_eq!(v, 0.0);
            prop_assert_eq!(b.gradient(&x).unwrap().components.amax(), 0.0);
        }
        prop_assert_eq!(b.value(&z).unwrap(), eps);
    }

    #[test]
    fn ledger_never_reaches_the_budget(budget in 0.5..50.0f64, heights in prop::collection::vec(0.001..0.5f64, 1..8)) {
        let m = fixtures::model("sphere2").unwrap();
        let z = m.reference_point();
        let mut series = PerturbationSeries::new(&m, budget).unwrap();
        for (i, h) in heights.iter().enumerate() {
            let delta = 0.8 / (i + 1) as f64;
            let before = series.ledger_total();
            match series.push(BumpFunction::new(&m, &z, delta, *h).unwrap()) {
                Ok(()) => prop_assert!(series.ledger_total() > before),
                Err(_) => prop_assert_eq!(series.ledger_total(), before),
            }
            prop_assert!(series.ledger_total() < budget);
        }
    }

    #[test]
    fn step_budgets_sum_below_half_the_total(eps in 1e-4..10.0f64) {
        let f = fixtures::objective("two-well").unwrap();
        let mut total = 0.0;
        let mut last = f64::INFINITY;
        for k in 0..40 {
            let (n, e) = step_schedule(&f, eps, k);
            prop_assert!(n >= 1 && e < last);
            last = e;
            total += e;
        }
        prop_assert!(total < 0.5 * eps);
    }
}
