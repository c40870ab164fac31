//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use hb_landscape::quad_rates::{FunctionClass, HbParams};
use nalgebra::{DVector, Matrix2, Vector2};

/// Spectral radius of the heavy-ball iteration matrix at curvature `lambda`.
pub fn companion_radius(p: HbParams, lambda: f64) -> f64 {
    Matrix2::new(1.0 + p.beta - p.gamma * lambda, -p.beta, 1.0, 0.0)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Largest companion radius over `n + 1` curvatures spread evenly in `[mu, L]`.
pub fn brute_rate(p: HbParams, c: FunctionClass, n: usize) -> f64 {
    (0..=n)
        .map(|s| companion_radius(p, c.mu() + (c.ell() - c.mu()) * s as f64 / n as f64))
        .fold(0.0, f64::max)
}

/// Central finite-difference gradient of a scalar function on the plane.
pub fn fd_grad(f: impl Fn(&Vector2<f64>) -> f64, x: &Vector2<f64>, h: f64) -> Vector2<f64> {
    let e = |i: usize| if i == 0 { Vector2::new(h, 0.0) } else { Vector2::new(0.0, h) };
    Vector2::new(
        (f(&(x + e(0))) - f(&(x - e(0)))) / (2.0 * h),
        (f(&(x + e(1))) - f(&(x - e(1)))) / (2.0 * h),
    )
}

/// Largest violation of the smooth strongly convex interpolation inequality over all
/// ordered pairs of `(x, f(x), grad f(x))` triplets; nonpositive for class members.
pub fn class_violation(pts: &[(DVector<f64>, f64, DVector<f64>)], c: FunctionClass) -> f64 {
    let (mu, ell) = (c.mu(), c.ell());
    let mut worst = f64::NEG_INFINITY;
    for (i, (xi, fi, gi)) in pts.iter().enumerate() {
        for (j, (xj, fj, gj)) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            // f_i >= f_j + <g_j, x_i - x_j> + |g_i - g_j|^2/(2L) + mu/(2(1 - mu/L)) |x_i - x_j - (g_i - g_j)/L|^2
            let w = (xi - xj) - (gi - gj) / ell;
            let rhs = fj + gj.dot(&(xi - xj)) + (gi - gj).norm_squared() / (2.0 * ell)
                + mu / (2.0 * (1.0 - mu / ell)) * w.norm_squared();
            worst = worst.max(rhs - fi);
        }
    }
    worst
}

pub fn dv(x: Vector2<f64>) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

/// Distance from `x` to the nonsmooth set of the counterexample: the hull edges and the
/// boundary rays of the vertex normal cones.
pub fn kink_distance(hull: &[Vector2<f64>], x: &Vector2<f64>) -> f64 {
    let k = hull.len();
    let mut d = f64::INFINITY;
    for i in 0..k {
        let (a, b) = (hull[i], hull[(i + 1) % k]);
        let e = b - a;
        let s = ((x - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
        d = d.min((x - (a + s * e)).norm());
        let n = Vector2::new(e.y, -e.x) / e.norm();
        for v in [a, b] {
            let s = (x - v).dot(&n).max(0.0);
            d = d.min((x - (v + s * n)).norm());
        }
    }
    d
}

pub fn proptest_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config { cases, failure_persistence: None, ..Default::default() }
}
