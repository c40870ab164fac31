//! Exact asymptotic rates of heavy-ball on quadratics with spectrum in `[mu, L]`.
//!
//! Covers region classification, level and sublevel sets of the rate, the optimal
//! tuning, and the parameter set covered by the Ghadimi et al. convergence proof.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for every comparison against a region boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Step-size and momentum of the heavy-ball recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HbParams {
    /// Step-size.
    pub gamma: f64,
    /// Momentum coefficient.
    pub beta: f64,
}

impl HbParams {
    pub fn new(gamma: f64, beta: f64) -> Self {
        Self { gamma, beta }
    }
}

/// Smooth strongly convex class with moduli `0 < mu <= L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionClass {
    mu: f64,
    ell: f64,
}

impl FunctionClass {
    /// Builds a class, rejecting `mu <= 0`, `L < mu` and non-finite inputs.
    pub fn new(mu: f64, ell: f64) -> Result<Self> {
        if !(mu.is_finite() && ell.is_finite()) || mu <= 0.0 || ell < mu {
            return Err(Error::Domain(format!(
                "function class needs 0 < mu <= L, got mu = {mu}, L = {ell}"
            )));
        }
        Ok(Self { mu, ell })
    }

    /// Class with `L = 1` and the given inverse condition number.
    pub fn with_kappa(kappa: f64) -> Result<Self> {
        Self::new(kappa, 1.0)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// Inverse condition number `mu / L`.
    pub fn kappa(&self) -> f64 {
        self.mu / self.ell
    }

    /// Convergence region on quadratics: `|beta| < 1` and `0 < gamma < 2(1 + beta)/L`.
    pub fn converges_on_quadratics(&self, p: HbParams) -> bool {
        p.beta.abs() < 1.0 && p.gamma > 0.0 && p.gamma < 2.0 * (1.0 + p.beta) / self.ell
    }
}

/// Behaviour of heavy-ball on quadratics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// Rate driven by the smallest eigenvalue, real spectrum.
    Lazy,
    /// Complex spectrum everywhere, rate `sqrt(beta)`.
    Robust,
    /// Rate driven by the largest eigenvalue, close to divergence.
    KnifesEdge,
    /// No convergence.
    NoConvergence,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Lazy => "lazy",
            Region::Robust => "robust",
            Region::KnifesEdge => "knifes-edge",
            Region::NoConvergence => "no-convergence",
        }
    }
}

/// Worst-case asymptotic rate and region tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Contraction factor per iteration; `None` when the method does not converge.
    pub rho: Option<f64>,
    pub region: Region,
}

impl RateReport {
    fn no_convergence() -> Self {
        Self { rho: None, region: Region::NoConvergence }
    }

    pub fn converges(&self) -> bool {
        self.region != Region::NoConvergence
    }
}

fn lazy_rate(p: HbParams, mu: f64) -> f64 {
    let h = (1.0 + p.beta - mu * p.gamma) / 2.0;
    h + (h * h - p.beta).sqrt()
}

fn knife_rate(p: HbParams, ell: f64) -> f64 {
    let h = (ell * p.gamma - (1.0 + p.beta)) / 2.0;
    h + (h * h - p.beta).sqrt()
}

/// Worst-case asymptotic rate of heavy-ball over quadratics with spectrum in `[mu, L]`.
///
/// Ties between regions resolve to [`Region::Robust`]. Negative momentum is accepted.
pub fn rate_on_quadratics(p: HbParams, c: FunctionClass) -> RateReport {
    let (gamma, beta) = (p.gamma, p.beta);
    let (mu, ell) = (c.mu, c.ell);
    if !(gamma.is_finite() && beta.is_finite())
        || gamma <= 0.0
        || beta.abs() >= 1.0
        || gamma >= 2.0 * (1.0 + beta) / ell
    {
        return RateReport::no_convergence();
    }
    let report = if beta >= 0.0 && in_robust_band(p, c) {
        RateReport { rho: Some(beta.sqrt()), region: Region::Robust }
    } else if gamma <= 2.0 * (1.0 + beta) / (ell + mu) {
        RateReport { rho: Some(lazy_rate(p, mu)), region: Region::Lazy }
    } else {
        RateReport { rho: Some(knife_rate(p, ell)), region: Region::KnifesEdge }
    };
    match report.rho {
        Some(r) if r < 1.0 => report,
        _ => RateReport::no_convergence(),
    }
}

fn in_robust_band(p: HbParams, c: FunctionClass) -> bool {
    let sb = p.beta.sqrt();
    let lo = (1.0 - sb).powi(2) / c.mu;
    let hi = (1.0 + sb).powi(2) / c.ell;
    p.gamma >= lo - BOUNDARY_TOL && p.gamma <= hi + BOUNDARY_TOL
}

/// Optimal tuning on quadratics and its rate `(1 - sqrt(kappa)) / (1 + sqrt(kappa))`.
///
/// For `mu = L` this returns gradient descent with step `1/L` and rate 0.
pub fn optimal_tuning(c: FunctionClass) -> (HbParams, f64) {
    if c.mu == c.ell {
        return (HbParams::new(1.0 / c.ell, 0.0), 0.0);
    }
    let sk = c.kappa().sqrt();
    let rho = (1.0 - sk) / (1.0 + sk);
    let beta = rho * rho;
    let gamma = 2.0 * (1.0 + beta) / (c.ell + c.mu);
    (HbParams::new(gamma, beta), rho)
}

/// Straight segment in the `(gamma, beta)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: HbParams,
    pub end: HbParams,
}

impl Segment {
    /// Point at parameter `s` in `[0, 1]`.
    pub fn point(&self, s: f64) -> HbParams {
        HbParams::new(
            self.start.gamma + s * (self.end.gamma - self.start.gamma),
            self.start.beta + s * (self.end.beta - self.start.beta),
        )
    }
}

/// Boundary of the set of parameters reaching a given rate: a closed triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSetTriangle {
    pub rho: f64,
    /// `gamma = (1 - rho)(1 - beta/rho)/mu`.
    pub lazy_segment: Segment,
    /// `beta = rho^2`.
    pub robust_segment: Segment,
    /// `gamma = (1 + rho)(1 + beta/rho)/L`.
    pub knife_segment: Segment,
}

impl LevelSetTriangle {
    /// The three corners: bottom, lazy-robust and robust-knife.
    pub fn vertices(&self) -> [HbParams; 3] {
        [self.lazy_segment.start, self.robust_segment.start, self.robust_segment.end]
    }

    /// `(gamma_min, gamma_max, beta_min, beta_max)` of the triangle.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        let v = self.vertices();
        let gs = v.iter().map(|p| p.gamma);
        let bs = v.iter().map(|p| p.beta);
        (
            gs.clone().fold(f64::INFINITY, f64::min),
            gs.fold(f64::NEG_INFINITY, f64::max),
            bs.clone().fold(f64::INFINITY, f64::min),
            bs.fold(f64::NEG_INFINITY, f64::max),
        )
    }
}

/// Level set of the quadratic rate at `rho`, for `rho*(c) <= rho <= 1`.
pub fn level_set(c: FunctionClass, rho: f64) -> Result<LevelSetTriangle> {
    if !(rho <= 1.0) {
        return Err(Error::Domain(format!("level rho = {rho} must be at most 1")));
    }
    let (opt, rho_star) = optimal_tuning(c);
    if rho < rho_star - BOUNDARY_TOL {
        return Err(Error::EmptySet { rho, rho_star });
    }
    if rho <= rho_star {
        let seg = Segment { start: opt, end: opt };
        return Ok(LevelSetTriangle {
            rho,
            lazy_segment: seg,
            robust_segment: seg,
            knife_segment: seg,
        });
    }
    let (mu, ell) = (c.mu, c.ell);
    let q = (1.0 - c.kappa()) / (1.0 + c.kappa());
    let beta_lo = (q - rho) / (1.0 / rho - q);
    let beta_hi = rho * rho;
    let lazy = |b: f64| HbParams::new((1.0 - rho) * (1.0 - b / rho) / mu, b);
    let knife = |b: f64| HbParams::new((1.0 + rho) * (1.0 + b / rho) / ell, b);
    Ok(LevelSetTriangle {
        rho,
        lazy_segment: Segment { start: lazy(beta_lo), end: lazy(beta_hi) },
        robust_segment: Segment { start: lazy(beta_hi), end: knife(beta_hi) },
        knife_segment: Segment { start: lazy(beta_lo), end: knife(beta_hi) },
    })
}

/// Whether `p` converges on quadratics at rate at most `rho`.
pub fn sublevel_contains(c: FunctionClass, rho: f64, p: HbParams) -> bool {
    match rate_on_quadratics(p, c).rho {
        Some(r) => r <= rho + BOUNDARY_TOL,
        None => false,
    }
}

/// Upper momentum bound of the Ghadimi region at step-size `gamma`.
pub fn ghadimi_beta_bound(c: FunctionClass, gamma: f64) -> f64 {
    let h = c.mu * gamma / 2.0;
    0.5 * (h + (h * h + 4.0 * (1.0 - c.ell * gamma / 2.0)).sqrt())
}

/// Membership in the parameter set where the Ghadimi et al. proof guarantees convergence.
pub fn ghadimi_contains(c: FunctionClass, p: HbParams) -> bool {
    p.gamma > 0.0
        && p.gamma < 2.0 / c.ell
        && p.beta >= 0.0
        && p.beta < ghadimi_beta_bound(c, p.gamma)
}

/// Best quadratic rate over the Ghadimi region, with the parameters reaching it.
///
/// The region is open in `beta`, so the returned point lies on its boundary. For small
/// `kappa` it is the cube-root closed form for `sqrt(beta)`, taken at
/// `gamma = (1 - sqrt(beta))^2 / mu` where the momentum bound meets the robust region.
/// When that point falls outside `gamma < 2/L` the optimum is located numerically.
pub fn ghadimi_optimum(c: FunctionClass) -> (HbParams, f64) {
    if c.mu == c.ell {
        return (HbParams::new(1.0 / c.ell, 0.0), 0.0);
    }
    let ik = 1.0 / c.kappa();
    let s = ((ik + 26.0) / 27.0).sqrt();
    let sb = (ik - 1.0).cbrt() * ((s + 1.0).cbrt() - (s - 1.0).cbrt()) - 1.0;
    let gamma = (1.0 - sb).powi(2) / c.mu;
    if sb > 0.0 && gamma < 2.0 / c.ell {
        return (HbParams::new(gamma, sb * sb), sb);
    }
    ghadimi_numeric(c)
}

fn ghadimi_numeric(c: FunctionClass) -> (HbParams, f64) {
    // Search the closure in coordinates gamma = u 2/L, beta = v * bound(gamma).
    let g_max = 2.0 / c.ell;
    let eval = |u: f64, v: f64| {
        let gamma = u * g_max;
        let p = HbParams::new(gamma, v * ghadimi_beta_bound(c, gamma).max(0.0));
        (p, rate_on_quadratics(p, c).rho.unwrap_or(f64::INFINITY))
    };
    let n = 64;
    let mut best = (0.5, 0.0, f64::INFINITY);
    for i in 1..n {
        for j in 0..=n {
            let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
            let r = eval(u, v).1;
            if r < best.2 {
                best = (u, v, r);
            }
        }
    }
    let mut width = 1.0 / n as f64;
    for _ in 0..60 {
        let (u0, v0) = (best.0, best.1);
        for i in -4..=4 {
            for j in -4..=4 {
                let u = (u0 + i as f64 * width / 4.0).clamp(1e-12, 1.0 - 1e-12);
                let v = (v0 + j as f64 * width / 4.0).clamp(0.0, 1.0);
                let r = eval(u, v).1;
                if r < best.2 {
                    best = (u, v, r);
                }
            }
        }
        width *= 0.7;
    }
    (eval(best.0, best.1).0, best.2)
}
