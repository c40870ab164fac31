//! Cycling of heavy-ball on the roots-of-unity cycle.
//!
//! Provides the analytic membership test for the parameters that make heavy-ball cycle
//! on the `K`-th roots of unity, the explicit piecewise-quadratic function `psi` on
//! which it does, and a grid check that fast quadratic rates always fall in that region.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad_rates::{level_set, sublevel_contains, FunctionClass, HbParams, BOUNDARY_TOL};

/// Default largest period searched.
pub const DEFAULT_K_MAX: usize = 100;

/// Largest `kappa` for which the cycling region has the single-interval form.
pub fn single_interval_kappa() -> f64 {
    ((3.0 - 5f64.sqrt()) / 4.0).powi(2)
}

/// The `K` points `(cos t theta, sin t theta)` with `theta = 2 pi / K`.
#[derive(Debug, Clone, PartialEq)]
pub struct RouCycle {
    pub k: usize,
    pub theta: f64,
    pub points: Vec<Vector2<f64>>,
    /// Rotation by `theta`, mapping point `t` to point `t + 1`.
    pub rotation: Matrix2<f64>,
}

impl RouCycle {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("cycle period must be at least 2, got {k}")));
        }
        let theta = 2.0 * std::f64::consts::PI / k as f64;
        let points = (0..k)
            .map(|t| {
                let a = theta * t as f64;
                Vector2::new(a.cos(), a.sin())
            })
            .collect();
        let (s, c) = theta.sin_cos();
        Ok(Self { k, theta, points, rotation: Matrix2::new(c, -s, s, c) })
    }

    /// Point `t`, with `t` taken modulo `K`.
    pub fn point(&self, t: i64) -> Vector2<f64> {
        self.points[t.rem_euclid(self.k as i64) as usize]
    }

    /// Gradients that make heavy-ball cycle on these points:
    /// `((1 + beta) I - R - beta R^-1) x_t / gamma`.
    pub fn gradients(&self, p: HbParams) -> Vec<Vector2<f64>> {
        let op = self.gradient_operator(p);
        self.points.iter().map(|x| op * x).collect()
    }

    fn gradient_operator(&self, p: HbParams) -> Matrix2<f64> {
        let r = self.rotation;
        ((1.0 + p.beta) * Matrix2::identity() - r - p.beta * r.transpose()) / p.gamma
    }
}

/// Quadratic in `mu gamma` whose nonpositivity characterizes cycling at period `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleQuadratic {
    pub a_k: f64,
    /// Square root of the reduced discriminant; `None` when it is negative.
    pub b_k: Option<f64>,
    pub gamma_minus: Option<f64>,
    pub gamma_plus: Option<f64>,
    /// Momentum above which the roots are real.
    pub beta_minus: f64,
}

fn constant_term(beta: f64, cos_t: f64, kappa: f64) -> f64 {
    2.0 * kappa * (1.0 - cos_t) * (1.0 + beta * beta - 2.0 * beta * cos_t)
}

fn linear_coeff(beta: f64, cos_t: f64, kappa: f64) -> f64 {
    beta - cos_t + kappa * (1.0 - beta * cos_t)
}

/// Momentum threshold above which the period-`K` quadratic has real roots.
pub fn beta_minus(k: usize, c: FunctionClass) -> f64 {
    let kappa = c.kappa();
    let ct = (2.0 * std::f64::consts::PI / k as f64).cos();
    let num = kappa * ct * ct + (1.0 - kappa).powi(2) * ct - kappa
        + (1.0 - kappa) * (1.0 - ct) * (2.0 * kappa * (1.0 + ct)).sqrt();
    num / (1.0 - 2.0 * kappa + kappa * kappa * ct * ct)
}

/// Value of the period-`K` membership polynomial at `gamma`.
pub fn polynomial_value(beta: f64, k: usize, c: FunctionClass, gamma: f64) -> f64 {
    let ct = (2.0 * std::f64::consts::PI / k as f64).cos();
    let x = c.mu() * gamma;
    x * x - 2.0 * linear_coeff(beta, ct, c.kappa()) * x + constant_term(beta, ct, c.kappa())
}

/// Coefficients and roots of the period-`K` membership polynomial at momentum `beta`.
pub fn membership_polynomial(beta: f64, k: usize, c: FunctionClass) -> Result<CycleQuadratic> {
    if k < 2 {
        return Err(Error::Domain(format!("cycle period must be at least 2, got {k}")));
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Domain(format!("momentum must lie in [0, 1), got {beta}")));
    }
    let kappa = c.kappa();
    let ct = (2.0 * std::f64::consts::PI / k as f64).cos();
    let a_k = linear_coeff(beta, ct, kappa);
    let disc = a_k * a_k - constant_term(beta, ct, kappa);
    let b_k = (disc >= 0.0).then(|| disc.sqrt());
    Ok(CycleQuadratic {
        a_k,
        b_k,
        gamma_minus: b_k.map(|b| (a_k - b) / c.mu()),
        gamma_plus: b_k.map(|b| (a_k + b) / c.mu()),
        beta_minus: beta_minus(k, c),
    })
}

/// `0 <= beta < 1` and `0 < gamma <= 2(1 + beta)/L`, up to `BOUNDARY_TOL` on the upper edge.
pub fn in_closed_convergence_region(p: HbParams, c: FunctionClass) -> bool {
    (0.0..1.0).contains(&p.beta) && p.gamma > 0.0 && p.gamma <= 2.0 * (1.0 + p.beta) / c.ell() + BOUNDARY_TOL
}

/// Whether heavy-ball with `p` cycles on the `K`-th roots of unity for some function
/// of the class. The divergence edge `gamma = 2(1 + beta)/L` is included; negative
/// momentum is rejected.
pub fn rou_member(p: HbParams, c: FunctionClass, k: usize) -> bool {
    // For K = 2 the lower root equals the divergence bound 2(1 + beta)/L, so the
    // region is empty; testing it numerically would only expose rounding.
    if k <= 2 || !in_closed_convergence_region(p, c) {
        return false;
    }
    match membership_polynomial(p.beta, k, c) {
        Ok(CycleQuadratic { gamma_minus: Some(lo), gamma_plus: Some(hi), .. }) => {
            lo <= p.gamma && p.gamma <= hi
        }
        _ => false,
    }
}

/// Smallest period in `[3, k_max]` on which heavy-ball with `p` cycles.
pub fn rou_member_any(p: HbParams, c: FunctionClass, k_max: usize) -> Option<usize> {
    (3..=k_max).find(|&k| rou_member(p, c, k))
}

/// Smallest period in `[3, k_max]` with `beta >= beta_minus` and `gamma` above the lower root,
/// inside the convergence region. For `kappa <= single_interval_kappa()` the union of
/// these sets over all periods equals the cycling region.
pub fn rou_member_any_lower_root(p: HbParams, c: FunctionClass, k_max: usize) -> Option<usize> {
    if !in_closed_convergence_region(p, c) {
        return None;
    }
    (3..=k_max).find(|&k| match membership_polynomial(p.beta, k, c) {
        Ok(CycleQuadratic { gamma_minus: Some(lo), beta_minus, .. }) => p.beta >= beta_minus && p.gamma >= lo,
        _ => false,
    })
}

/// Piecewise-quadratic function on which heavy-ball cycles on the roots of unity:
/// `psi(x) = L/2 |x|^2 - (L - mu)/2 d(x, conv{M x_t})^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterExample {
    pub m: Matrix2<f64>,
    /// Vertices `M x_t` in counter-clockwise order, indexed by `t`.
    pub hull: Vec<Vector2<f64>>,
    /// Radius of the balls around the cycle points where `psi` is exactly quadratic.
    pub r_max: f64,
    pub params: HbParams,
    pub class: FunctionClass,
    pub cycle: RouCycle,
}

/// Builds the counterexample for parameters in the period-`K` cycling region.
pub fn build_counterexample(p: HbParams, c: FunctionClass, k: usize) -> Result<CounterExample> {
    if c.mu() == c.ell() {
        return Err(Error::DegenerateClass(c.mu()));
    }
    if !rou_member(p, c, k) {
        return Err(Error::Precondition(format!(
            "(gamma = {}, beta = {}) is not in the period-{k} cycling region \
             (polynomial value {:.6e})",
            p.gamma,
            p.beta,
            if p.beta >= 0.0 && p.beta < 1.0 && k >= 2 {
                polynomial_value(p.beta, k, c, p.gamma)
            } else {
                f64::NAN
            }
        )));
    }
    let cycle = RouCycle::new(k)?;
    let r = cycle.rotation;
    let m = ((1.0 + p.beta - c.mu() * p.gamma) * Matrix2::identity() - r - p.beta * r.transpose())
        / ((c.ell() - c.mu()) * p.gamma);
    let hull: Vec<Vector2<f64>> = cycle.points.iter().map(|x| m * x).collect();
    for i in 0..k {
        let (a, b, d) = (hull[i], hull[(i + 1) % k], hull[(i + 2) % k]);
        if cross(b - a, d - b) <= 0.0 {
            return Err(Error::Precondition(format!(
                "hull vertices are not in strictly convex position at vertex {}",
                (i + 1) % k
            )));
        }
    }
    let x0 = cycle.points[0];
    let edge = m * (cycle.points[1] - x0);
    let r_max = -((x0 - m * x0).dot(&edge)) / edge.norm();
    Ok(CounterExample { m, hull, r_max: r_max.max(0.0), params: p, class: c, cycle })
}

fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

impl CounterExample {
    /// Closest point of the hull polygon to `x`.
    pub fn project(&self, x: &Vector2<f64>) -> Vector2<f64> {
        let k = self.hull.len();
        let mut inside = true;
        let mut best = *x;
        let mut best_d2 = f64::INFINITY;
        for i in 0..k {
            let a = self.hull[i];
            let e = self.hull[(i + 1) % k] - a;
            if cross(e, x - a) < 0.0 {
                inside = false;
            }
            let s = ((x - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
            let q = a + s * e;
            let d2 = (x - q).norm_squared();
            if d2 < best_d2 {
                best_d2 = d2;
                best = q;
            }
        }
        if inside {
            *x
        } else {
            best
        }
    }

    /// Value and gradient of `psi` for the stored class.
    pub fn eval(&self, x: &Vector2<f64>) -> (f64, Vector2<f64>) {
        psi_eval(self, self.class, x)
    }

    /// Whether the parameters lie strictly inside the region (`r_max > 0`).
    pub fn is_interior(&self) -> bool {
        self.r_max > 0.0
    }
}

/// Value and gradient of `psi` at `x`: `grad = L x - (L - mu)(x - proj(x))`.
pub fn psi_eval(ce: &CounterExample, c: FunctionClass, x: &Vector2<f64>) -> (f64, Vector2<f64>) {
    let (mu, ell) = (c.mu(), c.ell());
    let q = ce.project(x);
    let d = x - q;
    let value = 0.5 * ell * x.norm_squared() - 0.5 * (ell - mu) * d.norm_squared();
    (value, ell * x - (ell - mu) * d)
}

/// Outcome of the grid check that fast quadratic rates imply cycling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncompatibilityReport {
    pub kappa: f64,
    /// Level `(1 - C kappa) / (1 + C kappa)` of the sublevel set.
    pub rho: f64,
    /// Grid points inside the sublevel set.
    pub sls_points: usize,
    /// Grid points inside the sublevel set on which no roots-of-unity cycle exists.
    pub violations: Vec<HbParams>,
}

impl IncompatibilityReport {
    /// True when the sublevel set and the non-cycling region do not intersect on the grid.
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks on an `n x n` grid covering the sublevel set at level `(1 - C kappa)/(1 + C kappa)`
/// that every point of it cycles on some roots-of-unity cycle of period at most `k_max`.
pub fn incompatibility_scan(
    c: FunctionClass,
    big_c: f64,
    n: usize,
    k_max: usize,
) -> Result<IncompatibilityReport> {
    if !(big_c > 50.0 / 3.0) {
        return Err(Error::Precondition(format!("constant C = {big_c} must exceed 50/3")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("grid resolution must be at least 2, got {n}")));
    }
    let kappa = c.kappa();
    let rho = (1.0 - big_c * kappa) / (1.0 + big_c * kappa);
    let mut report = IncompatibilityReport { kappa, rho, sls_points: 0, violations: vec![] };
    let tri = match level_set(c, rho) {
        Ok(t) => t,
        Err(Error::EmptySet { .. }) => return Ok(report),
        Err(e) => return Err(e),
    };
    let (g0, g1, b0, b1) = tri.bounding_box();
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let cells: Vec<(bool, Option<HbParams>)> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let p = HbParams::new(step(g0, g1, idx / n), step(b0, b1, idx % n));
            if !sublevel_contains(c, rho, p) {
                return (false, None);
            }
            (true, rou_member_any(p, c, k_max).is_none().then_some(p))
        })
        .collect();
    report.sls_points = cells.iter().filter(|c| c.0).count();
    report.violations = cells.into_iter().filter_map(|c| c.1).collect();
    Ok(report)
}
