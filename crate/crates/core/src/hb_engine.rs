//! Heavy-ball simulation, cycle detection, rate estimation and robustness harness.

use nalgebra::{Complex, DVector, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad_rates::{FunctionClass, HbParams, BOUNDARY_TOL};
use crate::rou_region::CounterExample;

/// Differentiable objective.
pub trait Objective {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn grad(&self, x: &DVector<f64>) -> DVector<f64>;
}

/// `f(x) = sum_i d_i x_i^2 / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalQuadratic {
    pub diag: Vec<f64>,
}

impl Objective for DiagonalQuadratic {
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.diag.iter().zip(x.iter()).map(|(d, v)| d * v * v).sum::<f64>()
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(x.len(), self.diag.iter().zip(x.iter()).map(|(d, v)| d * v))
    }
}

fn to2(x: &DVector<f64>) -> Vector2<f64> {
    Vector2::new(x[0], x[1])
}

fn from2(x: Vector2<f64>) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

impl Objective for CounterExample {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.eval(&to2(x)).0
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        from2(self.eval(&to2(x)).1)
    }
}

/// Iterates of a heavy-ball run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    /// `z_0, z_1, ..., z_{steps+1}`; shorter when the run was truncated.
    pub iterates: Vec<DVector<f64>>,
    pub grad_calls: usize,
    /// Parameters used at each step.
    pub params_used: Vec<HbParams>,
    /// Step at which the oracle returned a non-finite gradient.
    pub failed_at: Option<usize>,
}

/// Runs `steps` heavy-ball iterations from `(x0, x1)`.
pub fn run<G>(oracle: G, p: HbParams, x0: DVector<f64>, x1: DVector<f64>, steps: usize) -> Result<SimTrace>
where
    G: FnMut(&DVector<f64>) -> DVector<f64>,
{
    run_with_schedule(oracle, |_| p, x0, x1, steps)
}

/// Runs heavy-ball with per-step parameters `schedule(t)`.
pub fn run_with_schedule<G, S>(
    mut oracle: G,
    mut schedule: S,
    x0: DVector<f64>,
    x1: DVector<f64>,
    steps: usize,
) -> Result<SimTrace>
where
    G: FnMut(&DVector<f64>) -> DVector<f64>,
    S: FnMut(usize) -> HbParams,
{
    if steps < 1 {
        return Err(Error::Domain("a run needs at least one step".into()));
    }
    if x0.len() != x1.len() {
        return Err(Error::Domain("initial points have different dimensions".into()));
    }
    let mut trace = SimTrace {
        iterates: Vec::with_capacity(steps + 2),
        grad_calls: 0,
        params_used: Vec::with_capacity(steps),
        failed_at: None,
    };
    trace.iterates.push(x0);
    trace.iterates.push(x1);
    for t in 1..=steps {
        let z = &trace.iterates[t];
        let g = oracle(z);
        trace.grad_calls += 1;
        if g.iter().any(|v| !v.is_finite()) {
            trace.failed_at = Some(t);
            break;
        }
        let p = schedule(t);
        let next = z - p.gamma * g + p.beta * (z - &trace.iterates[t - 1]);
        trace.params_used.push(p);
        trace.iterates.push(next);
    }
    Ok(trace)
}

/// Compares tail iterates with their `K`-lagged predecessors after a burn-in of half the
/// trace. Returns whether the trace cycles and the largest lagged deviation.
pub fn detect_cycle(trace: &SimTrace, k: usize, tol: f64) -> Result<(bool, f64)> {
    detect_cycle_with_burn_in(trace, k, tol, trace.iterates.len() / 2)
}

/// [`detect_cycle`] with an explicit burn-in. A tail whose spread is below `tol` is
/// constant and does not count as a cycle.
pub fn detect_cycle_with_burn_in(trace: &SimTrace, k: usize, tol: f64, burn_in: usize) -> Result<(bool, f64)> {
    let n = trace.iterates.len();
    if k == 0 || n < 2 * k + 2 {
        return Err(Error::Domain(format!("trace of length {n} is too short for period {k}")));
    }
    let start = burn_in.max(k).min(n - 1);
    let z = &trace.iterates;
    let max_dev = (start..n).map(|t| (&z[t] - &z[t - k]).norm()).fold(0.0, f64::max);
    let spread = (start..n).map(|t| (&z[t] - &z[start]).norm()).fold(0.0, f64::max);
    Ok((max_dev <= tol && spread >= tol, max_dev))
}

/// Rate from a least-squares fit of `log d_t` over the tail half of `d`.
fn log_slope_rate(d: &[f64]) -> Option<f64> {
    let tail = &d[d.len() / 2..];
    if tail.len() < 2 {
        return None;
    }
    let n = tail.len() as f64;
    let tm = (n - 1.0) / 2.0;
    let lm = tail.iter().map(|v| v.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in tail.iter().enumerate() {
        let dx = i as f64 - tm;
        sxy += dx * (v.ln() - lm);
        sxx += dx * dx;
    }
    Some((sxy / sxx).exp())
}

/// Empirical rate of convergence to `reference` from the norms of `(z_t, z_{t-1})`.
///
/// Distances below `1e-300` end the fit.
pub fn estimate_rate(trace: &SimTrace, reference: &DVector<f64>) -> Result<f64> {
    let z = &trace.iterates;
    let mut d = Vec::with_capacity(z.len());
    for t in 1..z.len() {
        let v = ((&z[t] - reference).norm_squared() + (&z[t - 1] - reference).norm_squared()).sqrt();
        if v < 1e-300 {
            break;
        }
        d.push(v);
    }
    log_slope_rate(&d).ok_or_else(|| {
        Error::Domain(format!("only {} positive distances, need at least 4", d.len()))
    })
}

/// Shape of the decomposition of the isotropic iteration matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityRegion {
    /// Two distinct real eigenvalues.
    Lazy,
    /// Complex-conjugate eigenvalues.
    Robust,
    /// Double eigenvalue, Jordan block.
    Boundary,
}

/// Decomposition `P D P^-1` of `[[1 + beta - mu gamma, -beta], [1, 0]]` with `|D| < 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityConstants {
    /// `1 / (|P| |P^-1|)`.
    pub kappa_p: f64,
    /// `|D|`.
    pub rho_d: f64,
    pub region_used: StabilityRegion,
    #[serde(skip)]
    pub p: Matrix2<Complex<f64>>,
    #[serde(skip)]
    pub d: Matrix2<Complex<f64>>,
}

fn re(v: f64) -> Complex<f64> {
    Complex::new(v, 0.0)
}

/// Operator norm of a complex 2x2 matrix.
pub fn op_norm(m: &Matrix2<Complex<f64>>) -> f64 {
    let t: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    (t / 2.0 + (t * t / 4.0 - det * det).max(0.0).sqrt()).sqrt()
}

/// Inverse condition number `1 / (|P| |P^-1|)` from `Tr(P^H P)` and `|det P|`.
fn inverse_condition(p: &Matrix2<Complex<f64>>) -> f64 {
    let t: f64 = p.iter().map(|z| z.norm_sqr()).sum();
    let det = (p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(1, 0)]).norm();
    let x = t / (2.0 * det);
    // x - sqrt(x^2 - 1), written to avoid cancellation.
    1.0 / (x + (x * x - 1.0).max(0.0).sqrt())
}

/// Decomposition constants for the residual dynamics around the cycle.
///
/// `epsilon` is the Jordan-block offset at the lazy/robust boundary; it defaults to
/// `(1 - beta) / (2 sqrt(beta))`.
pub fn stability_constants(p: HbParams, mu: f64, epsilon: Option<f64>) -> Result<StabilityConstants> {
    let a = 1.0 + p.beta - mu * p.gamma;
    let h = a / 2.0;
    let disc = h * h - p.beta;
    let on_boundary =
        p.beta > 0.0 && (p.gamma - (1.0 - p.beta.sqrt()).powi(2) / mu).abs() <= BOUNDARY_TOL;
    let (region, pm, dm) = if on_boundary {
        let sb = p.beta.sqrt();
        let eps = epsilon.unwrap_or((1.0 - p.beta) / (2.0 * sb));
        if !(eps > 0.0 && eps < (1.0 - p.beta) / sb) {
            return Err(Error::Precondition(format!(
                "epsilon = {eps} must lie in (0, {})",
                (1.0 - p.beta) / sb
            )));
        }
        let pm = Matrix2::new(re(sb), re(eps * sb / (1.0 + p.beta)), re(1.0), re(-p.beta * eps / (1.0 + p.beta)));
        let dm = Matrix2::new(re(sb), re(sb * eps), re(0.0), re(sb));
        (StabilityRegion::Boundary, pm, dm)
    } else if disc > 0.0 {
        let (l1, l2) = (h + disc.sqrt(), h - disc.sqrt());
        let pm = Matrix2::new(re(l1), re(l2), re(1.0), re(1.0));
        (StabilityRegion::Lazy, pm, Matrix2::new(re(l1), re(0.0), re(0.0), re(l2)))
    } else {
        let w = (-disc).sqrt();
        let (l1, l2) = (Complex::new(h, w), Complex::new(h, -w));
        let pm = Matrix2::new(l1, l2, re(1.0), re(1.0));
        (StabilityRegion::Robust, pm, Matrix2::new(l1, re(0.0), re(0.0), l2))
    };
    let rho_d = op_norm(&dm);
    if !(rho_d < 1.0) {
        return Err(Error::NoContraction(rho_d));
    }
    Ok(StabilityConstants { kappa_p: inverse_condition(&pm), rho_d, region_used: region, p: pm, d: dm })
}

impl StabilityConstants {
    /// `|P^-1 (d_t, d_{t-1})|`, applying `P` blockwise to each coordinate.
    pub fn tube_quantity(&self, d_t: &Vector2<f64>, d_prev: &Vector2<f64>) -> f64 {
        let p = self.p;
        let det = p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(1, 0)];
        let inv = Matrix2::new(p[(1, 1)], -p[(0, 1)], -p[(1, 0)], p[(0, 0)]) / det;
        (0..2)
            .map(|c| {
                let v = inv * nalgebra::Vector2::new(re(d_t[c]), re(d_prev[c]));
                v[0].norm_sqr() + v[1].norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn p_norm(&self) -> f64 {
        op_norm(&self.p)
    }
}

/// How per-step noise is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NoiseMode {
    /// Uniform in `[-bound, bound]` for scalars and in the disk for the gradient.
    UniformRandom,
    /// Signs chosen to maximize the next deviation from the cycle.
    AdversarialSign,
}

/// Perturbations of a run around the cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSpec {
    /// Norm of `(delta_0, delta_1)` as a fraction of `kappa_P r_max`.
    pub init_radius: f64,
    pub gamma_jitter: f64,
    pub beta_jitter: f64,
    pub grad_noise: f64,
    pub mode: NoiseMode,
    pub seed: u64,
}

impl NoiseSpec {
    /// Only an initial perturbation.
    pub fn init_only(init_radius: f64, seed: u64) -> Self {
        Self {
            init_radius,
            gamma_jitter: 0.0,
            beta_jitter: 0.0,
            grad_noise: 0.0,
            mode: NoiseMode::UniformRandom,
            seed,
        }
    }

    /// Bounds equal to `fraction` of the largest ones covered by the robustness
    /// guarantee. The parameter budget is split evenly between step-size and momentum.
    pub fn within_guarantee(
        ce: &CounterExample,
        consts: &StabilityConstants,
        init_radius: f64,
        fraction: f64,
        mode: NoiseMode,
        seed: u64,
    ) -> Self {
        let (kr, budget) = noise_budget(ce, consts);
        let (mu, ell) = (ce.class.mu(), ce.class.ell());
        Self {
            init_radius,
            gamma_jitter: fraction * budget / 2.0 / (4.0 / ce.params.gamma + mu * kr),
            beta_jitter: fraction * budget / 2.0 / (2.0 + 2.0 * kr),
            grad_noise: fraction * budget * ell / 4.0,
            mode,
            seed,
        }
    }

    fn is_init_only(&self) -> bool {
        self.gamma_jitter == 0.0 && self.beta_jitter == 0.0 && self.grad_noise == 0.0
    }
}

/// `(kappa_P r_max, (1 - rho_D) kappa_P r_max / 2)`.
fn noise_budget(ce: &CounterExample, consts: &StabilityConstants) -> (f64, f64) {
    let kr = consts.kappa_p * ce.r_max;
    (kr, 0.5 * (1.0 - consts.rho_d) * kr)
}

/// Conditions of the robustness guarantee that `noise` violates.
pub fn guarantee_violations(ce: &CounterExample, consts: &StabilityConstants, noise: &NoiseSpec) -> Vec<String> {
    let (kr, budget) = noise_budget(ce, consts);
    let (mu, ell) = (ce.class.mu(), ce.class.ell());
    let slack = 1e-12 * (1.0 + budget);
    let mut out = vec![];
    if noise.init_radius > 1.0 {
        out.push(format!("initial radius {} exceeds kappa_P r_max", noise.init_radius));
    }
    let param = (4.0 / ce.params.gamma + mu * kr) * noise.gamma_jitter + (2.0 + 2.0 * kr) * noise.beta_jitter;
    if param > budget + slack {
        out.push(format!("parameter noise {param:.3e} exceeds budget {budget:.3e}"));
    }
    let grad = 4.0 / ell * noise.grad_noise;
    if grad > budget + slack {
        out.push(format!("gradient noise {grad:.3e} exceeds budget {budget:.3e}"));
    }
    out
}

/// Result of a perturbed run around the roots-of-unity cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedOutcome {
    pub trace: SimTrace,
    /// Every iterate stayed within `r_max` of its cycle point.
    pub stayed_in_tube: bool,
    /// Largest distance from the cycle.
    pub max_deviation: f64,
    /// Largest `|P^-1 (d_t, d_{t-1})| |P| / r_max`; at most 1 under the guarantee.
    pub max_tube_ratio: f64,
    /// Contraction of the residual, measured when only the initial point is perturbed.
    pub residual_decay_rate: Option<f64>,
}

/// Residual norms below this level are rounding noise and end the decay fit.
const RESIDUAL_FLOOR: f64 = 1e-10;

fn unit_disk(rng: &mut ChaCha8Rng) -> Vector2<f64> {
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = rng.gen::<f64>().sqrt();
    Vector2::new(r * a.cos(), r * a.sin())
}

/// Runs heavy-ball on `psi` from a perturbed start with per-step noise.
///
/// With `strict`, noise outside the robustness guarantee is rejected.
pub fn perturbed_run(
    ce: &CounterExample,
    c: FunctionClass,
    p: HbParams,
    k: usize,
    noise: &NoiseSpec,
    steps: usize,
    strict: bool,
) -> Result<PerturbedOutcome> {
    if ce.cycle.k != k {
        return Err(Error::Domain(format!("counterexample has period {}, not {k}", ce.cycle.k)));
    }
    if !(ce.r_max > 0.0) {
        return Err(Error::Precondition("r_max must be positive".into()));
    }
    let consts = stability_constants(p, c.mu(), None)?;
    if strict {
        let v = guarantee_violations(ce, &consts, noise);
        if !v.is_empty() {
            return Err(Error::Precondition(v.join("; ")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let dir: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let scale = noise.init_radius * consts.kappa_p * ce.r_max / dn;
    let x = |t: usize| ce.cycle.point(t as i64);
    let mut z: Vec<Vector2<f64>> = vec![
        x(0) + Vector2::new(dir[0], dir[1]) * scale,
        x(1) + Vector2::new(dir[2], dir[3]) * scale,
    ];
    let mut params = Vec::with_capacity(steps);
    for t in 1..=steps {
        let (zt, zp) = (z[t], z[t - 1]);
        let g = ce.eval(&zt).1;
        let step = |dg: f64, db: f64, e: Vector2<f64>| {
            zt - (p.gamma + dg) * (g + e) + (p.beta + db) * (zt - zp)
        };
        let (dg, db, e) = match noise.mode {
            NoiseMode::UniformRandom => (
                noise.gamma_jitter * rng.gen_range(-1.0..=1.0),
                noise.beta_jitter * rng.gen_range(-1.0..=1.0),
                noise.grad_noise * unit_disk(&mut rng),
            ),
            NoiseMode::AdversarialSign => {
                let d = zt - x(t);
                let u = if d.norm() > 0.0 { d / d.norm() } else { Vector2::new(1.0, 0.0) };
                let mut best = (0.0, 0.0, Vector2::zeros(), f64::NEG_INFINITY);
                for s in 0..8 {
                    let sg = if s & 1 == 0 { 1.0 } else { -1.0 };
                    let sb = if s & 2 == 0 { 1.0 } else { -1.0 };
                    let se = if s & 4 == 0 { 1.0 } else { -1.0 };
                    let cand = (sg * noise.gamma_jitter, sb * noise.beta_jitter, se * noise.grad_noise * u);
                    let dev = (step(cand.0, cand.1, cand.2) - x(t + 1)).norm();
                    if dev > best.3 {
                        best = (cand.0, cand.1, cand.2, dev);
                    }
                }
                (best.0, best.1, best.2)
            }
        };
        params.push(HbParams::new(p.gamma + dg, p.beta + db));
        z.push(step(dg, db, e));
    }
    let deltas: Vec<Vector2<f64>> = z.iter().enumerate().map(|(t, v)| v - x(t)).collect();
    let max_deviation = deltas.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let pn = consts.p_norm();
    let max_tube_ratio = (1..deltas.len())
        .map(|t| consts.tube_quantity(&deltas[t], &deltas[t - 1]) * pn / ce.r_max)
        .fold(0.0, f64::max);
    let residual_decay_rate = if noise.is_init_only() && noise.init_radius > 0.0 {
        let norms: Vec<f64> = (1..deltas.len())
            .map(|t| (deltas[t].norm_squared() + deltas[t - 1].norm_squared()).sqrt())
            .take_while(|v| *v > RESIDUAL_FLOOR)
            .collect();
        log_slope_rate(&norms)
    } else {
        None
    };
    let trace = SimTrace {
        iterates: z.into_iter().map(from2).collect(),
        grad_calls: steps,
        params_used: params,
        failed_at: None,
    };
    Ok(PerturbedOutcome {
        trace,
        stayed_in_tube: max_deviation <= ce.r_max,
        max_deviation,
        max_tube_ratio,
        residual_decay_rate,
    })
}

/// Largest multiple of the guaranteed noise bounds under which adversarial runs of
/// `steps` iterations (initial radius at the guaranteed maximum) still stay in the tube,
/// located by doubling then bisection. The guarantee itself corresponds to 1.
pub fn observed_noise_threshold(ce: &CounterExample, steps: usize, seed: u64) -> Result<f64> {
    let (p, c, k) = (ce.params, ce.class, ce.cycle.k);
    let consts = stability_constants(p, c.mu(), None)?;
    let stays = |s: f64| -> Result<bool> {
        let noise = NoiseSpec::within_guarantee(ce, &consts, 1.0, s, NoiseMode::AdversarialSign, seed);
        Ok(perturbed_run(ce, c, p, k, &noise, steps, false)?.stayed_in_tube)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while stays(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(hi);
        }
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if stays(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
