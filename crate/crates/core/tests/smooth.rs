mod common;

use common::{class_violation, dv, proptest_config};
use hb_landscape::hb_engine::{DiagonalQuadratic, Objective};
use hb_landscape::quad_rates::{FunctionClass, HbParams};
use hb_landscape::rou_region::{build_counterexample, CounterExample};
use hb_landscape::smooth::{
    cycle_check_smoothed, dilate, gauss_legendre, hull_crossing_samples, kernel_nodes, scaled_cycle_deviation,
    smoothed_grad, third_derivative_estimate, Mollifier, QuadratureSpec, SmoothedCounterExample,
};
use hb_landscape::Error;
use nalgebra::{DVector, Vector2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fig4() -> (CounterExample, HbParams, FunctionClass) {
    let c = FunctionClass::new(0.005, 1.0).unwrap();
    let p = HbParams::new(3.5, 0.75);
    (build_counterexample(p, c, 7).unwrap(), p, c)
}

fn smoothed() -> SmoothedCounterExample {
    let (ce, _, _) = fig4();
    let eps = ce.r_max / 2.0;
    SmoothedCounterExample::new(ce, eps, QuadratureSpec::default()).unwrap()
}

#[test]
fn gauss_legendre_matches_known_rule() {
    let (x, w) = gauss_legendre(3);
    let r = (0.6_f64).sqrt();
    for (a, b) in x.iter().zip([-r, 0.0, r]) {
        assert!((a - b).abs() < 1e-14);
    }
    for (a, b) in w.iter().zip([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0]) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn kernel_second_moment_matches_radial_integral() {
    // Independent oracle: trapezoid rule in the radius for int |y|^2 u(y) dy.
    let m = Mollifier::new(1.0).unwrap();
    let nodes = kernel_nodes(&m, QuadratureSpec { n_r: 96, n_theta: 32 });
    let quad: f64 = nodes.iter().map(|(y, w)| w * y.norm_squared()).sum();
    let n = 200_000;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 1..n {
        let r = i as f64 / n as f64;
        let b = (-1.0 / (1.0 - r * r)).exp();
        num += b * r * r * r;
        den += b * r;
    }
    assert!((quad - num / den).abs() < 1e-8);
}

#[test]
fn coincides_with_psi_on_the_cycle() {
    let sce = smoothed();
    for t in 0..7 {
        let x = sce.base.cycle.point(t);
        let g = smoothed_grad(&sce, &x);
        assert!((g.grad - sce.base.eval(&x).1).norm() <= 1e-4);
        assert!(!g.precision_warning);
    }
}

#[test]
fn linear_gradient_deep_inside_the_hull() {
    let sce = smoothed();
    let x = Vector2::new(0.0, 0.0);
    assert!((smoothed_grad(&sce, &x).grad - sce.base.class.ell() * x).norm() <= 1e-4);
    let x = sce.base.hull[0] * 0.3;
    assert!((smoothed_grad(&sce, &x).grad - sce.base.class.ell() * x).norm() <= 1e-4);
}

#[test]
fn smoothed_function_stays_in_the_class() {
    let sce = smoothed();
    let c = sce.base.class;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts: Vec<_> = (0..60)
        .map(|_| {
            let x = DVector::from_vec(vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
            (x.clone(), sce.value(&x), sce.grad(&x))
        })
        .collect();
    assert!(class_violation(&pts, c) <= 1e-6);
}

#[test]
fn smoothed_run_cycles() {
    let (_, p, _) = fig4();
    let sce = smoothed();
    assert!(cycle_check_smoothed(&sce, p, 7, 500).unwrap() <= 1e-3);
    assert!(cycle_check_smoothed(&sce, p, 6, 10).is_err());
}

#[test]
fn unsmoothed_limit_cycles_exactly() {
    let (ce, p, _) = fig4();
    assert!(scaled_cycle_deviation(&ce, &ce, p, 1.0, 5000).unwrap() <= 1e-9);
}

#[test]
fn radius_above_r_max_is_rejected() {
    let (ce, _, _) = fig4();
    let eps = 2.0 * ce.r_max;
    assert!(matches!(SmoothedCounterExample::new(ce, eps, QuadratureSpec::default()), Err(Error::Precondition(_))));
}

#[test]
fn dilation_scales_cycle_and_third_derivative() {
    let (ce, p, _) = fig4();
    let sce = smoothed();
    let samples = hull_crossing_samples(&ce, ce.r_max, &[-0.5, 0.0, 0.5]);
    let h = 1e-3 * ce.r_max;
    let tau = third_derivative_estimate(&sce, &samples, h);
    assert!(tau > 0.0);
    let base = scaled_cycle_deviation(&sce, &ce, p, 1.0, 100).unwrap();
    for lambda in [10.0, 100.0] {
        let dil = dilate(sce.clone(), lambda).unwrap();
        let scaled: Vec<_> = samples.iter().map(|(x, v)| (lambda * x, v.clone())).collect();
        let tau_l = third_derivative_estimate(&dil, &scaled, lambda * h);
        assert!((tau / tau_l - lambda).abs() < 1e-3 * lambda, "ratio {}", tau / tau_l);
        let dev = scaled_cycle_deviation(&dil, &ce, p, lambda, 100).unwrap() / lambda;
        assert!((dev - base).abs() < 1e-9, "{dev} vs {base}");
    }
}

proptest! {
    #![proptest_config(proptest_config(64))]

    #[test]
    fn unit_dilation_is_the_identity(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let f = DiagonalQuadratic { diag: vec![0.3, 2.0] };
        let d = dilate(f.clone(), 1.0).unwrap();
        let x = dv(Vector2::new(a, b));
        prop_assert_eq!(d.value(&x), f.value(&x));
        prop_assert_eq!(d.grad(&x), f.grad(&x));
    }

    #[test]
    fn dilation_identities(a in -3.0f64..3.0, b in -3.0f64..3.0, lambda in 0.1f64..50.0) {
        let f = DiagonalQuadratic { diag: vec![0.3, 2.0] };
        let d = dilate(f.clone(), lambda).unwrap();
        let x = dv(Vector2::new(a, b));
        // Quadratics are invariant under dilation.
        prop_assert!((d.value(&x) - f.value(&x)).abs() < 1e-12 * (1.0 + f.value(&x)));
        prop_assert!((d.grad(&x) - f.grad(&x)).norm() < 1e-12 * (1.0 + f.grad(&x).norm()));
    }
}
