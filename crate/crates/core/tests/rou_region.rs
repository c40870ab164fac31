mod common;

use common::{class_violation, dv, fd_grad, kink_distance, proptest_config};
use hb_landscape::cycle_lp::{cycle_gradients, interpolation_residuals};
use hb_landscape::quad_rates::{ghadimi_contains, optimal_tuning, FunctionClass, HbParams};
use hb_landscape::rou_region::{
    beta_minus, build_counterexample, incompatibility_scan, membership_polynomial, polynomial_value, psi_eval,
    rou_member, rou_member_any, rou_member_any_lower_root, single_interval_kappa, RouCycle,
};
use hb_landscape::Error;
use nalgebra::{DVector, Vector2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fig4_class() -> FunctionClass {
    FunctionClass::new(0.005, 1.0).unwrap()
}

/// Whether the roots-of-unity cycle with its forced gradients and zero values satisfies
/// every interpolation inequality of the class.
fn cycle_interpolates(p: HbParams, c: FunctionClass, k: usize) -> bool {
    let cyc = RouCycle::new(k).unwrap();
    let pts: Vec<DVector<f64>> = cyc.points.iter().map(|x| dv(*x)).collect();
    let grads = cycle_gradients(&pts, p).unwrap();
    let r = interpolation_residuals(&pts, &grads, &vec![0.0; k], c).unwrap();
    r.max() <= 1e-12
}

#[test]
fn spec_membership_examples() {
    let c = fig4_class();
    assert!(rou_member(HbParams::new(3.5, 0.75), c, 7));
    assert!(rou_member_any(HbParams::new(3.5, 0.75), c, 25).is_some_and(|k| k <= 7));
    let c1 = FunctionClass::new(0.01, 1.0).unwrap();
    assert!(!rou_member(HbParams::new(1.0, 0.0), c1, 3));
    for beta in [0.0, 0.3, 0.9] {
        for g in [0.1, 1.0, 2.0] {
            assert!(!rou_member(HbParams::new(g * (1.0 + beta), beta), c1, 2));
        }
    }
    let lessard = FunctionClass::new(1.0, 25.0).unwrap();
    assert!(rou_member_any(optimal_tuning(lessard).0, lessard, 100).is_some());
}

#[test]
fn no_real_roots_below_beta_minus() {
    let c = FunctionClass::with_kappa(0.01).unwrap();
    for k in [3, 5, 10, 40] {
        let bm = beta_minus(k, c);
        if bm > 1e-6 {
            assert!(membership_polynomial(bm - 1e-7, k, c).unwrap().b_k.is_none(), "K={k}");
        }
        assert!(membership_polynomial((bm + 1e-7).max(0.0), k, c).unwrap().b_k.is_some(), "K={k}");
    }
}

#[test]
fn polynomial_sign_matches_direct_interpolation() {
    // The region test and a direct check of the interpolation inequalities agree.
    let c = FunctionClass::with_kappa(0.02).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut members = 0;
    for _ in 0..2000 {
        let beta = rng.gen_range(0.0..0.99);
        let p = HbParams::new(rng.gen_range(0.01..1.0) * 2.0 * (1.0 + beta), beta);
        let k = rng.gen_range(3..12);
        let q = polynomial_value(beta, k, c, p.gamma);
        if q.abs() < 1e-9 {
            continue;
        }
        let analytic = rou_member(p, c, k);
        members += analytic as usize;
        assert_eq!(analytic, cycle_interpolates(p, c, k), "{p:?} K={k}");
    }
    assert!(members > 50);
}

#[test]
fn lower_root_form_agrees_for_small_kappa() {
    let c = FunctionClass::with_kappa(0.9 * single_interval_kappa()).unwrap();
    let n = 80;
    for i in 1..n {
        for j in 0..n {
            let beta = j as f64 / n as f64;
            let p = HbParams::new(i as f64 / n as f64 * 2.0 * (1.0 + beta), beta);
            assert_eq!(
                rou_member_any(p, c, 60).is_some(),
                rou_member_any_lower_root(p, c, 60).is_some(),
                "{p:?}"
            );
        }
    }
}

#[test]
fn ghadimi_region_never_cycles() {
    let c = FunctionClass::with_kappa(0.01).unwrap();
    let n = 60;
    for i in 1..n {
        for j in 0..n {
            let p = HbParams::new(2.0 * i as f64 / n as f64, j as f64 / n as f64);
            if ghadimi_contains(c, p) {
                assert_eq!(rou_member_any(p, c, 100), None, "{p:?}");
            }
        }
    }
}

#[test]
fn counterexample_gradients_at_cycle_points() {
    let c = fig4_class();
    for p in [HbParams::new(3.5, 0.75), HbParams::new(3.3, 0.75)] {
        let ce = build_counterexample(p, c, 7).unwrap();
        let g = ce.cycle.gradients(p);
        for (t, gt) in g.iter().enumerate() {
            let x = ce.cycle.point(t as i64);
            assert!((psi_eval(&ce, c, &x).1 - gt).norm() < 1e-10);
        }
        assert!(ce.r_max > 0.0);
    }
}

#[test]
fn r_max_vanishes_at_the_lower_root() {
    let c = fig4_class();
    let beta = 0.75;
    let lo = membership_polynomial(beta, 7, c).unwrap().gamma_minus.unwrap();
    let mut prev = f64::INFINITY;
    for d in [1e-2, 1e-4, 1e-6, 1e-9] {
        let ce = build_counterexample(HbParams::new(lo * (1.0 + d), beta), c, 7).unwrap();
        assert!(ce.r_max <= prev);
        prev = ce.r_max;
    }
    assert!(prev < 1e-8, "r_max near the root {prev}");
}

#[test]
fn counterexample_errors() {
    let c = fig4_class();
    match build_counterexample(HbParams::new(0.5, 0.75), c, 7) {
        Err(Error::Precondition(msg)) => assert!(msg.contains("polynomial value")),
        other => panic!("unexpected {other:?}"),
    }
    let flat = FunctionClass::new(1.0, 1.0).unwrap();
    assert!(matches!(build_counterexample(HbParams::new(1.0, 0.5), flat, 7), Err(Error::DegenerateClass(_))));
}

#[test]
fn projection_matches_dense_boundary_search() {
    let ce = build_counterexample(HbParams::new(3.3, 0.75), fig4_class(), 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = ce.hull.len();
    for _ in 0..200 {
        let x = Vector2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let q = ce.project(&x);
        if (q - x).norm() == 0.0 {
            continue;
        }
        let mut best = f64::INFINITY;
        for i in 0..k {
            let (a, b) = (ce.hull[i], ce.hull[(i + 1) % k]);
            for s in 0..=2000 {
                best = best.min((x - (a + (b - a) * (s as f64 / 2000.0))).norm());
            }
        }
        assert!((q - x).norm() <= best + 1e-12 && best - (q - x).norm() < 1e-3);
    }
}

#[test]
fn psi_satisfies_class_inequalities() {
    let c = fig4_class();
    let ce = build_counterexample(HbParams::new(3.3, 0.75), c, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pts: Vec<_> = (0..150)
        .map(|_| {
            let x = Vector2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let (f, g) = psi_eval(&ce, c, &x);
            (dv(x), f, dv(g))
        })
        .collect();
    assert!(class_violation(&pts, c) <= 1e-9);
}

#[test]
fn incompatibility_examples() {
    for kappa in [0.01, 0.001] {
        let c = FunctionClass::with_kappa(kappa).unwrap();
        assert!(incompatibility_scan(c, 50.0 / 3.0 + 0.01, 120, 1000).unwrap().holds());
    }
    let c = FunctionClass::with_kappa(0.001).unwrap();
    assert!(matches!(incompatibility_scan(c, 16.0, 50, 100), Err(Error::Precondition(_))));
}

proptest! {
    #![proptest_config(proptest_config(256))]

    #[test]
    fn psi_gradient_matches_finite_differences(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let c = fig4_class();
        let ce = build_counterexample(HbParams::new(3.3, 0.75), c, 7).unwrap();
        let x = Vector2::new(x, y);
        let h = 1e-6;
        prop_assume!(kink_distance(&ce.hull, &x) > 1e-4);
        let g = psi_eval(&ce, c, &x).1;
        let fd = fd_grad(|z| psi_eval(&ce, c, z).0, &x, h);
        prop_assert!((g - fd).norm() <= 1e-6 * g.norm().max(1.0));
    }

    #[test]
    fn roots_bracket_the_member_interval(kappa in 0.001f64..0.2, beta in 0.0f64..0.99, k in 3usize..30) {
        let c = FunctionClass::with_kappa(kappa).unwrap();
        let q = membership_polynomial(beta, k, c).unwrap();
        if let (Some(lo), Some(hi)) = (q.gamma_minus, q.gamma_plus) {
            prop_assert!(polynomial_value(beta, k, c, lo).abs() < 1e-12);
            prop_assert!(polynomial_value(beta, k, c, hi).abs() < 1e-10);
            prop_assert!(polynomial_value(beta, k, c, 0.5 * (lo + hi)) <= 0.0);
        }
    }
}
