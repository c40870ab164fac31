//! Existence of general heavy-ball cycles on smooth strongly convex functions.
//!
//! A candidate cycle fixes the gradients through the inverted recursion. The cycle
//! exists in the class iff those points and gradients satisfy the interpolation
//! inequalities. Lifting the points to their Gram matrix makes the inequalities
//! linear. Averaging over cyclic shifts makes the Gram matrix circulant, and a
//! circulant Gram matrix is a nonnegative combination of harmonic blocks. The search
//! therefore reduces to a small linear program over the block weights.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad_rates::{FunctionClass, HbParams};
use crate::simplex::{LinearProgram, LpOutcome, Relation};

/// Feasibility threshold on the normalized LP margin.
pub const FEAS_TOL: f64 = 1e-9;

/// Gradients that make heavy-ball cycle on `points`:
/// `g_t = ((1 + beta) x_t - x_{t+1} - beta x_{t-1}) / gamma`, indices modulo `K`.
pub fn cycle_gradients(points: &[DVector<f64>], p: HbParams) -> Result<Vec<DVector<f64>>> {
    if p.gamma == 0.0 {
        return Err(Error::ZeroStep);
    }
    let k = points.len();
    if k < 2 {
        return Err(Error::Domain(format!("a cycle needs at least 2 points, got {k}")));
    }
    Ok((0..k)
        .map(|t| {
            let next = &points[(t + 1) % k];
            let prev = &points[(t + k - 1) % k];
            ((1.0 + p.beta) * &points[t] - next - p.beta * prev) / p.gamma
        })
        .collect())
}

fn ensure_nondegenerate(c: FunctionClass) -> Result<()> {
    if c.mu() == c.ell() {
        Err(Error::DegenerateClass(c.mu()))
    } else {
        Ok(())
    }
}

/// Right side of the interpolation inequality between `(x_i, g_i)` and `(x_j, g_j)`
/// without function values.
fn pair_term(
    xi: &DVector<f64>,
    xj: &DVector<f64>,
    gi: &DVector<f64>,
    gj: &DVector<f64>,
    c: FunctionClass,
) -> f64 {
    let (mu, ell) = (c.mu(), c.ell());
    let w = xi - gi / ell - xj + gj / ell;
    gj.dot(&(xi - xj))
        + (gi - gj).norm_squared() / (2.0 * ell)
        + mu / (2.0 * (1.0 - c.kappa())) * w.norm_squared()
}

/// Interpolation residuals `r_ij = f_j - f_i + <g_j, x_i - x_j> + |g_i - g_j|^2 / (2L)
/// + mu / (2(1 - kappa)) |x_i - g_i/L - x_j + g_j/L|^2`.
///
/// A function of the class through the triplets exists iff every entry is `<= 0`.
pub fn interpolation_residuals(
    points: &[DVector<f64>],
    grads: &[DVector<f64>],
    values: &[f64],
    c: FunctionClass,
) -> Result<DMatrix<f64>> {
    ensure_nondegenerate(c)?;
    let k = points.len();
    if grads.len() != k || values.len() != k {
        return Err(Error::Domain(format!(
            "length mismatch: {k} points, {} gradients, {} values",
            grads.len(),
            values.len()
        )));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            0.0
        } else {
            values[j] - values[i] + pair_term(&points[i], &points[j], &grads[i], &grads[j], c)
        }
    }))
}

/// Quadratic form of the interpolation inequality between points `i` and `0`, acting on
/// the Gram matrix of the cycle points.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftMatrix {
    pub i: usize,
    pub k: usize,
    pub m: DMatrix<f64>,
}

/// Row `t` holds the coefficients of `g_t` as a combination of the points.
fn gradient_stencil(p: HbParams, k: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(k, k);
    for t in 0..k {
        s[(t, t)] += (1.0 + p.beta) / p.gamma;
        s[(t, (t + 1) % k)] -= 1.0 / p.gamma;
        s[(t, (t + k - 1) % k)] -= p.beta / p.gamma;
    }
    s
}

fn lift_matrices_unchecked(p: HbParams, c: FunctionClass, k: usize) -> Vec<LiftMatrix> {
    let s = gradient_stencil(p, k);
    let ell = c.ell();
    let w_coef = c.mu() / (2.0 * (1.0 - c.kappa()));
    let s0 = s.row(0).transpose();
    (1..k)
        .map(|i| {
            let mut a = DVector::zeros(k);
            a[i] += 1.0;
            a[0] -= 1.0;
            let d = s.row(i).transpose() - &s0;
            let w = &a - &d / ell;
            let cross = &s0 * a.transpose();
            let m = (&cross + cross.transpose()) / 2.0
                + &d * d.transpose() / (2.0 * ell)
                + w_coef * &w * w.transpose();
            LiftMatrix { i, k, m }
        })
        .collect()
}

/// Matrices `M_i` with `<G, M_i>` equal to the interpolation inequality between points
/// `i` and `0` (function values set to zero), for `i = 1..K-1`.
///
/// The construction is checked against direct evaluation on random points.
pub fn lift_matrices(p: HbParams, c: FunctionClass, k: usize) -> Result<Vec<LiftMatrix>> {
    ensure_nondegenerate(c)?;
    if p.gamma == 0.0 {
        return Err(Error::ZeroStep);
    }
    if k < 2 {
        return Err(Error::Domain(format!("cycle period must be at least 2, got {k}")));
    }
    let mats = lift_matrices_unchecked(p, c, k);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let points: Vec<DVector<f64>> =
        (0..k).map(|_| DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0))).collect();
    let grads = cycle_gradients(&points, p)?;
    let x = DMatrix::from_columns(&points);
    let gram = x.transpose() * x;
    for lm in &mats {
        let lifted = gram.dot(&lm.m);
        let direct = pair_term(&points[lm.i], &points[0], &grads[lm.i], &grads[0], c);
        if (lifted - direct).abs() > 1e-10 * (1.0 + direct.abs()) {
            return Err(Error::SelfTest(format!(
                "lifted form {lifted} differs from direct evaluation {direct} at i = {}",
                lm.i
            )));
        }
    }
    Ok(mats)
}

fn max_abs(g: &DMatrix<f64>) -> f64 {
    g.iter().fold(0.0, |a, v| a.max(v.abs()))
}

fn ensure_symmetric(g: &DMatrix<f64>) -> Result<()> {
    if !g.is_square() {
        return Err(Error::Domain(format!("matrix is {}x{}, not square", g.nrows(), g.ncols())));
    }
    let tol = 1e-12 * (1.0 + max_abs(g));
    if (g - g.transpose()).iter().any(|v| v.abs() > tol) {
        return Err(Error::Domain("matrix is not symmetric".into()));
    }
    Ok(())
}

/// Average of `g0` over simultaneous cyclic shifts of rows and columns.
pub fn symmetrize_gram(g0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_symmetric(g0)?;
    let k = g0.nrows();
    Ok(DMatrix::from_fn(k, k, |i, j| {
        (0..k).map(|s| g0[((i + s) % k, (j + s) % k)]).sum::<f64>() / k as f64
    }))
}

/// Harmonic block `cos(2 pi ell |i - j| / K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicGram {
    pub ell: usize,
    pub h: DMatrix<f64>,
}

/// Harmonic block of frequency `ell` in `[1, K/2]`.
pub fn harmonic_gram(k: usize, ell: usize) -> Result<HarmonicGram> {
    if ell < 1 || 2 * ell > k {
        return Err(Error::Domain(format!("frequency {ell} outside [1, {}]", k / 2)));
    }
    let w = 2.0 * std::f64::consts::PI * ell as f64 / k as f64;
    let h = DMatrix::from_fn(k, k, |i, j| (w * (i as f64 - j as f64)).cos());
    Ok(HarmonicGram { ell, h })
}

/// Nonnegative weights `nu_ell`, `ell = 1..K/2`, with `g = sum nu_ell H_ell`.
///
/// The weights come from the discrete Fourier transform of the first row.
pub fn decompose_circulant(g: &DMatrix<f64>) -> Result<Vec<f64>> {
    ensure_symmetric(g)?;
    let k = g.nrows();
    let scale = 1.0 + max_abs(g);
    for i in 0..k {
        for j in 0..k {
            if (g[(i, j)] - g[(0, (j + k - i) % k)]).abs() > 1e-9 * scale {
                return Err(Error::Domain(format!("matrix is not circulant at ({i}, {j})")));
            }
        }
    }
    let row: Vec<f64> = (0..k).map(|j| g[(0, j)]).collect();
    let total: f64 = row.iter().sum();
    if total.abs() > 1e-9 * scale * k as f64 {
        return Err(Error::Domain(format!("rows must sum to zero, got {total}")));
    }
    let mut nu = Vec::with_capacity(k / 2);
    for ell in 1..=k / 2 {
        let w = 2.0 * std::f64::consts::PI * ell as f64 / k as f64;
        let dft: f64 = row.iter().enumerate().map(|(j, c)| c * (w * j as f64).cos()).sum();
        let weight = if 2 * ell == k { dft / k as f64 } else { 2.0 * dft / k as f64 };
        if weight < -1e-9 {
            return Err(Error::NotDecomposable { index: ell, value: weight });
        }
        nu.push(weight.max(0.0));
    }
    Ok(nu)
}

/// `sum nu_ell H_ell` for weights indexed from `ell = 1`.
pub fn circulant_from_weights(k: usize, nu: &[f64]) -> Result<DMatrix<f64>> {
    let mut g = DMatrix::zeros(k, k);
    for (i, w) in nu.iter().enumerate() {
        g += *w * harmonic_gram(k, i + 1)?.h;
    }
    Ok(g)
}

/// Points in dimension `K - 1` whose Gram matrix is `sum nu_ell H_ell`: one rotating
/// plane per frequency, plus an alternating axis for `ell = K/2` when `K` is even.
pub fn symmetric_cycle_points(k: usize, nu: &[f64]) -> Vec<DVector<f64>> {
    let theta = 2.0 * std::f64::consts::PI / k as f64;
    (0..k)
        .map(|t| {
            let mut x = Vec::with_capacity(k - 1);
            for (i, w) in nu.iter().enumerate() {
                let ell = i + 1;
                let r = w.max(0.0).sqrt();
                if 2 * ell == k {
                    x.push(if t % 2 == 0 { r } else { -r });
                } else {
                    let a = theta * (ell * t) as f64;
                    x.push(r * a.cos());
                    x.push(r * a.sin());
                }
            }
            DVector::from_vec(x)
        })
        .collect()
}

/// Certificate that heavy-ball cycles on `K` points for some function of the class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleCertificate {
    pub k: usize,
    /// Harmonic weights for `ell = 1..K/2`, summing to one.
    pub nu: Vec<f64>,
    #[serde(skip)]
    pub gram: DMatrix<f64>,
    #[serde(skip)]
    pub points: Vec<DVector<f64>>,
    /// Optimal normalized LP margin; nonpositive up to `FEAS_TOL`.
    pub margin: f64,
}

impl CycleCertificate {
    /// Largest off-diagonal interpolation residual of the reconstructed cycle.
    pub fn max_residual(&self, p: HbParams, c: FunctionClass) -> Result<f64> {
        let grads = cycle_gradients(&self.points, p)?;
        let r = interpolation_residuals(&self.points, &grads, &vec![0.0; self.k], c)?;
        Ok((0..self.k)
            .flat_map(|i| (0..self.k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|ij| r[ij])
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Matrix with entries `<M_i, H_ell>`, rows `i = 1..K-1`, columns `ell = 1..K/2`.
pub fn harmonic_constraint_matrix(p: HbParams, c: FunctionClass, k: usize) -> Result<DMatrix<f64>> {
    let mats = lift_matrices(p, c, k)?;
    let blocks: Vec<HarmonicGram> =
        (1..=k / 2).map(|ell| harmonic_gram(k, ell)).collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(k - 1, k / 2, |i, l| mats[i].m.dot(&blocks[l].h)))
}

/// Solves `min t` s.t. `P nu <= t`, `sum nu = 1`, `nu >= 0`, with `P` scaled by its
/// largest entry. Returns the optimal margin and weights.
///
/// The program is the value of the matrix game `P`; it is solved in the form
/// `max sum y` s.t. `(P + 2) y <= 1`, `y >= 0`, whose origin is feasible, so
/// `t = 1 / sum y - 2` and `nu = y / sum y`.
pub fn lp_margin(p: HbParams, c: FunctionClass, k: usize) -> Result<(f64, Vec<f64>)> {
    if k < 3 {
        return Err(Error::Domain(format!("cycle period must be at least 3, got {k}")));
    }
    let pm = harmonic_constraint_matrix(p, c, k)?;
    let scale = max_abs(&pm);
    let pm = if scale > 0.0 { pm / scale } else { pm };
    let n = k / 2;
    let mut lp = LinearProgram::new(vec![-1.0; n]);
    for i in 0..k - 1 {
        lp.add_row((0..n).map(|l| pm[(i, l)] + GAME_SHIFT).collect(), Relation::Le, 1.0);
    }
    match lp.solve()? {
        LpOutcome::Optimal { x, .. } => {
            let total: f64 = x.iter().sum();
            if !(total > 0.0) {
                return Err(Error::Solver { iterations: 0, reason: "game program has zero value".into() });
            }
            let nu: Vec<f64> = x.iter().map(|v| v / total).collect();
            // Recompute the margin from the weights to avoid the 1/sum cancellation.
            let margin = (0..k - 1)
                .map(|i| (0..n).map(|l| pm[(i, l)] * nu[l]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            Ok((margin, nu))
        }
        LpOutcome::Infeasible { pivots } | LpOutcome::Unbounded { pivots } => Err(Error::Solver {
            iterations: pivots,
            reason: "bounded feasible program reported infeasible or unbounded".into(),
        }),
    }
}

/// Shift making every scaled entry positive.
const GAME_SHIFT: f64 = 2.0;

/// Certificate of a period-`K` cycle when the LP margin is at most `FEAS_TOL`.
pub fn lp_feasible(p: HbParams, c: FunctionClass, k: usize) -> Result<Option<CycleCertificate>> {
    let (margin, nu) = lp_margin(p, c, k)?;
    if margin > FEAS_TOL {
        return Ok(None);
    }
    Ok(Some(CycleCertificate {
        k,
        gram: circulant_from_weights(k, &nu)?,
        points: symmetric_cycle_points(k, &nu),
        nu,
        margin,
    }))
}

/// Certificate for the smallest feasible period in `[3, k_max]`.
pub fn lp_feasible_any(p: HbParams, c: FunctionClass, k_max: usize) -> Result<Option<CycleCertificate>> {
    for k in 3..=k_max {
        if let Some(cert) = lp_feasible(p, c, k)? {
            return Ok(Some(cert));
        }
    }
    Ok(None)
}
