//! Smooth counterexamples: mollified `psi` and the dilation operator.
//!
//! Convolving `psi` with a compactly supported bump keeps it in the class and makes
//! it infinitely differentiable. Because `psi` is quadratic near the cycle points, the
//! smoothed gradient still equals the cycle gradients there. Dilating by `lambda`
//! keeps the cycle (scaled) and divides the third derivative by `lambda`.

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hb_engine::{run, Objective};
use crate::quad_rates::HbParams;
use crate::rou_region::CounterExample;

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Golub-Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// `u_eps(y) = u(y / eps) / eps^2` with `u(x) = exp(-1 / (1 - |x|^2)) / Z` on the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mollifier {
    pub epsilon: f64,
    /// `Z`, the integral of the unnormalized bump over the unit disk.
    pub normalization: f64,
}

impl Mollifier {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!("mollifier radius must be positive, got {epsilon}")));
        }
        let (x, w) = gauss_legendre(200);
        let z = x
            .iter()
            .zip(&w)
            .map(|(x, w)| {
                let r = 0.5 * (x + 1.0);
                0.5 * w * bump(r * r) * r
            })
            .sum::<f64>()
            * std::f64::consts::TAU;
        Ok(Self { epsilon, normalization: z })
    }

    pub fn density(&self, y: &Vector2<f64>) -> f64 {
        let e = self.epsilon;
        bump(y.norm_squared() / (e * e)) / (self.normalization * e * e)
    }
}

/// Polar tensor grid on the support disk: Gauss-Legendre in radius, trapezoid in angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadratureSpec {
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { n_r: 64, n_theta: 64 }
    }
}

/// Nodes `y` and weights `w u_eps(y)` so that `sum w f(y)` approximates `int f u_eps`.
pub fn kernel_nodes(m: &Mollifier, q: QuadratureSpec) -> Vec<(Vector2<f64>, f64)> {
    let (x, w) = gauss_legendre(q.n_r);
    let dt = std::f64::consts::TAU / q.n_theta as f64;
    let mut nodes = Vec::with_capacity(q.n_r * q.n_theta);
    for (xi, wi) in x.iter().zip(&w) {
        let r = 0.5 * m.epsilon * (xi + 1.0);
        let wr = 0.5 * m.epsilon * wi * r * dt;
        for j in 0..q.n_theta {
            let a = dt * j as f64;
            let y = Vector2::new(r * a.cos(), r * a.sin());
            nodes.push((y, wr * m.density(&y)));
        }
    }
    nodes
}

/// Default tolerance on the estimated quadrature error of a smoothed gradient.
pub const DEFAULT_QUAD_TOL: f64 = 1e-4;

/// `phi_eps = u_eps * psi`.
#[derive(Debug, Clone)]
pub struct SmoothedCounterExample {
    pub base: CounterExample,
    pub moll: Mollifier,
    pub quad: QuadratureSpec,
    /// Threshold above which a smoothed gradient carries a precision warning.
    pub tolerance: f64,
    nodes: Vec<(Vector2<f64>, f64)>,
    coarse: Vec<(Vector2<f64>, f64)>,
}

impl SmoothedCounterExample {
    /// Requires `0 < epsilon <= r_max`.
    pub fn new(base: CounterExample, epsilon: f64, quad: QuadratureSpec) -> Result<Self> {
        if epsilon > base.r_max {
            return Err(Error::Precondition(format!(
                "epsilon = {epsilon} exceeds r_max = {}",
                base.r_max
            )));
        }
        let moll = Mollifier::new(epsilon)?;
        if quad.n_r < 2 || quad.n_theta < 2 {
            return Err(Error::Domain("quadrature needs at least 2x2 nodes".into()));
        }
        let coarse_spec = QuadratureSpec { n_r: quad.n_r / 2, n_theta: quad.n_theta / 2 };
        Ok(Self {
            nodes: kernel_nodes(&moll, quad),
            coarse: kernel_nodes(&moll, coarse_spec),
            base,
            moll,
            quad,
            tolerance: DEFAULT_QUAD_TOL,
        })
    }

    fn convolve_grad(&self, nodes: &[(Vector2<f64>, f64)], x: &Vector2<f64>) -> Vector2<f64> {
        nodes.iter().fold(Vector2::zeros(), |acc, (y, w)| acc + *w * self.base.eval(&(x - y)).1)
    }

    pub fn value_at(&self, x: &Vector2<f64>) -> f64 {
        self.nodes.iter().map(|(y, w)| w * self.base.eval(&(x - y)).0).sum()
    }
}

/// Smoothed gradient with an error estimate from a half-resolution grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothedGrad {
    pub grad: Vector2<f64>,
    pub error_estimate: f64,
    /// Set when the error estimate exceeds the tolerance.
    pub precision_warning: bool,
}

/// `grad phi_eps(x) = int grad psi(x - y) u_eps(y) dy` by polar quadrature.
pub fn smoothed_grad(sce: &SmoothedCounterExample, x: &Vector2<f64>) -> SmoothedGrad {
    let grad = sce.convolve_grad(&sce.nodes, x);
    let error_estimate = (grad - sce.convolve_grad(&sce.coarse, x)).norm();
    SmoothedGrad { grad, error_estimate, precision_warning: error_estimate > sce.tolerance }
}

impl Objective for SmoothedCounterExample {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.value_at(&Vector2::new(x[0], x[1]))
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let g = self.convolve_grad(&self.nodes, &Vector2::new(x[0], x[1]));
        DVector::from_column_slice(g.as_slice())
    }
}

/// Runs heavy-ball on `f` from `(lambda x_0, lambda x_1)` and returns the largest
/// distance to the scaled cycle `lambda x_t`.
pub fn scaled_cycle_deviation<F: Objective>(
    f: &F,
    base: &CounterExample,
    p: HbParams,
    lambda: f64,
    steps: usize,
) -> Result<f64> {
    let x = |t: i64| DVector::from_column_slice((lambda * base.cycle.point(t)).as_slice());
    let trace = run(|z| f.grad(z), p, x(0), x(1), steps)?;
    Ok(trace
        .iterates
        .iter()
        .enumerate()
        .map(|(t, z)| (z - x(t as i64)).norm())
        .fold(0.0, f64::max))
}

/// Largest deviation from the cycle of heavy-ball on the smoothed counterexample.
pub fn cycle_check_smoothed(sce: &SmoothedCounterExample, p: HbParams, k: usize, steps: usize) -> Result<f64> {
    if sce.base.params != p || sce.base.cycle.k != k {
        return Err(Error::Domain("parameters differ from those of the counterexample".into()));
    }
    if !sce.base.is_interior() {
        return Err(Error::Precondition("parameters must lie strictly inside the region".into()));
    }
    scaled_cycle_deviation(sce, &sce.base, p, 1.0, steps)
}

/// `x -> lambda^2 f(x / lambda)`.
#[derive(Debug, Clone)]
pub struct DilatedFunction<F> {
    pub inner: F,
    pub lambda: f64,
}

/// Dilation of `f` by `lambda > 0`.
pub fn dilate<F: Objective>(f: F, lambda: f64) -> Result<DilatedFunction<F>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("dilation factor must be positive, got {lambda}")));
    }
    Ok(DilatedFunction { inner: f, lambda })
}

impl<F: Objective> Objective for DilatedFunction<F> {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.lambda * self.lambda * self.inner.value(&(x / self.lambda))
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        self.lambda * self.inner.grad(&(x / self.lambda))
    }
}

/// Largest `|<grad f(x + h v) - 2 grad f(x) + grad f(x - h v), v>| / h^2` over the
/// samples `(x, v)`: an empirical estimate of the third-derivative bound, not its value.
pub fn third_derivative_estimate<F: Objective>(f: &F, samples: &[(DVector<f64>, DVector<f64>)], h: f64) -> f64 {
    samples
        .iter()
        .map(|(x, v)| {
            let d = f.grad(&(x + h * v)) - 2.0 * f.grad(x) + f.grad(&(x - h * v));
            d.dot(v).abs() / (h * h)
        })
        .fold(0.0, f64::max)
}

/// Points across each hull edge of the counterexample, paired with the outward unit
/// normal. Offsets are given as multiples of `spread`.
pub fn hull_crossing_samples(ce: &CounterExample, spread: f64, offsets: &[f64]) -> Vec<(DVector<f64>, DVector<f64>)> {
    let k = ce.hull.len();
    let mut out = vec![];
    for i in 0..k {
        let (a, b) = (ce.hull[i], ce.hull[(i + 1) % k]);
        let e = b - a;
        let n = Vector2::new(e.y, -e.x) / e.norm();
        let mid = 0.5 * (a + b);
        for s in offsets {
            let x = mid + s * spread * n;
            out.push((DVector::from_column_slice(x.as_slice()), DVector::from_column_slice(n.as_slice())));
        }
    }
    out
}
