mod common;

use common::{brute_rate, proptest_config};
use hb_landscape::quad_rates::{
    ghadimi_beta_bound, ghadimi_contains, ghadimi_optimum, level_set, optimal_tuning, rate_on_quadratics,
    sublevel_contains, FunctionClass, HbParams, Region,
};
use hb_landscape::Error;
use proptest::prelude::*;

fn class() -> FunctionClass {
    FunctionClass::new(1.0, 25.0).unwrap()
}

#[test]
fn gradient_descent_step() {
    let r = rate_on_quadratics(HbParams::new(1.0 / 25.0, 0.0), class());
    assert_eq!(r.region, Region::Lazy);
    assert!((r.rho.unwrap() - 0.96).abs() < 1e-15);
}

#[test]
fn robust_point() {
    let r = rate_on_quadratics(HbParams::new(0.1, 0.5), class());
    assert_eq!(r.region, Region::Robust);
    assert!((r.rho.unwrap() - 0.5_f64.sqrt()).abs() < 1e-15);
}

#[test]
fn divergent_step() {
    let c = FunctionClass::new(1.0, 1.0).unwrap();
    let r = rate_on_quadratics(HbParams::new(3.0, 0.0), c);
    assert_eq!(r.region, Region::NoConvergence);
    assert_eq!(r.rho, None);
}

#[test]
fn optimal_tuning_cases() {
    let (p, rho) = optimal_tuning(class());
    assert!((p.beta - 4.0 / 9.0).abs() < 1e-15);
    assert!((p.gamma - 1.0 / 9.0).abs() < 1e-15);
    assert!((rho - 2.0 / 3.0).abs() < 1e-15);
    let (p, rho) = optimal_tuning(FunctionClass::new(2.0, 2.0).unwrap());
    assert_eq!((p.beta, rho), (0.0, 0.0));
    let (_, rho) = optimal_tuning(FunctionClass::with_kappa(1e-4).unwrap());
    assert!((rho - 0.98).abs() < 1e-3);
}

#[test]
fn level_set_robust_segment() {
    let t = level_set(class(), 0.9).unwrap();
    let s = t.robust_segment;
    assert!((s.start.beta - 0.81).abs() < 1e-14 && (s.end.beta - 0.81).abs() < 1e-14);
    let (lo, hi) = (s.start.gamma.min(s.end.gamma), s.start.gamma.max(s.end.gamma));
    assert!((lo - 0.01).abs() < 1e-14);
    assert!((hi - 0.1444).abs() < 1e-14);
}

#[test]
fn level_set_degenerates_at_optimum() {
    let (p, rho) = optimal_tuning(class());
    let t = level_set(class(), rho).unwrap();
    for v in t.vertices() {
        assert!((v.gamma - p.gamma).abs() < 1e-12 && (v.beta - p.beta).abs() < 1e-12);
    }
    assert!(matches!(level_set(class(), 0.5), Err(Error::EmptySet { .. })));
    assert!(matches!(level_set(class(), 1.5), Err(Error::Domain(_))));
}

#[test]
fn sublevel_examples() {
    let c = FunctionClass::with_kappa(0.1).unwrap();
    let (p, rho) = optimal_tuning(c);
    assert!(sublevel_contains(c, rho, p));
    let gd = HbParams::new(1.0, 0.0);
    assert!(sublevel_contains(c, 0.9, gd));
    assert!(!sublevel_contains(c, 0.8, gd));
}

#[test]
fn ghadimi_region() {
    let c = class();
    assert!(ghadimi_contains(c, HbParams::new(1.0 / 25.0, 0.0)));
    assert!(!ghadimi_contains(c, HbParams::new(2.0 / 25.0, 0.0)));
    let (p, rho) = ghadimi_optimum(c);
    assert!(ghadimi_beta_bound(c, p.gamma) >= p.beta - 1e-9);
    let r = rate_on_quadratics(p, c).rho.unwrap();
    assert!((r - rho).abs() < 1e-12);
    // Brute force over the region on a fine grid.
    let n = 300;
    let mut best = f64::INFINITY;
    for i in 1..n {
        let g = 2.0 / 25.0 * i as f64 / n as f64;
        for j in 0..n {
            let q = HbParams::new(g, j as f64 / n as f64);
            if ghadimi_contains(c, q) {
                best = best.min(rate_on_quadratics(q, c).rho.unwrap());
            }
        }
    }
    assert!(rho <= best + 1e-12 && best - rho < 5e-3, "closed form {rho}, grid {best}");
}

#[test]
fn ghadimi_small_kappa_asymptotics() {
    for kappa in [1e-3, 1e-4, 1e-5] {
        let (_, rho) = ghadimi_optimum(FunctionClass::with_kappa(kappa).unwrap());
        let v = (1.0 - rho) / kappa;
        assert!((7.0..9.0).contains(&v), "kappa {kappa}: {v}");
    }
}

#[test]
fn rejects_bad_class() {
    assert!(FunctionClass::new(0.0, 1.0).is_err());
    assert!(FunctionClass::new(2.0, 1.0).is_err());
    assert!(FunctionClass::new(f64::NAN, 1.0).is_err());
}

proptest! {
    #![proptest_config(proptest_config(256))]

    #[test]
    fn rate_matches_companion_brute_force(kappa in 0.001f64..0.9, g in 0.001f64..0.999, beta in 0.0f64..0.999) {
        let c = FunctionClass::with_kappa(kappa).unwrap();
        let p = HbParams::new(g * 2.0 * (1.0 + beta), beta);
        let r = rate_on_quadratics(p, c);
        let brute = brute_rate(p, c, 200);
        // The maximum over [mu, L] sits at an endpoint or on the complex arc, both sampled.
        prop_assert!((r.rho.unwrap() - brute).abs() < 1e-9, "{:?} vs {brute}", r);
    }

    #[test]
    fn outside_convergence_region_has_no_rate(kappa in 0.001f64..0.9, g in 1.0f64..3.0, beta in -0.99f64..0.99) {
        let c = FunctionClass::with_kappa(kappa).unwrap();
        let p = HbParams::new(g * 2.0 * (1.0 + beta), beta);
        prop_assert_eq!(rate_on_quadratics(p, c).region, Region::NoConvergence);
        prop_assert!(brute_rate(p, c, 50) >= 1.0 - 1e-12);
    }

    #[test]
    fn level_set_boundary_has_level_rate(kappa in 0.001f64..0.5, frac in 0.01f64..0.99, s in 0.0f64..1.0) {
        let c = FunctionClass::with_kappa(kappa).unwrap();
        let (_, rho_star) = optimal_tuning(c);
        let rho = rho_star + frac * (1.0 - rho_star);
        let t = level_set(c, rho).unwrap();
        for seg in [t.lazy_segment, t.robust_segment, t.knife_segment] {
            let p = seg.point(s);
            let r = rate_on_quadratics(p, c).rho.unwrap();
            prop_assert!((r - rho).abs() < 1e-9, "segment point {:?} has rate {r}, level {rho}", p);
        }
    }

    #[test]
    fn optimal_tuning_is_a_lower_bound(kappa in 0.001f64..0.99, g in 0.001f64..0.999, beta in 0.0f64..0.999) {
        let c = FunctionClass::with_kappa(kappa).unwrap();
        let (_, rho_star) = optimal_tuning(c);
        let p = HbParams::new(g * 2.0 * (1.0 + beta), beta);
        prop_assert!(rate_on_quadratics(p, c).rho.unwrap() >= rho_star - 1e-12);
    }
}
