//! Dense two-phase simplex method with Bland's anti-cycling rule.
//!
//! Sized for the small linear programs of the cycle test (about a hundred rows and
//! columns). Pivoting is deterministic.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-12;

/// Sense of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// `minimize c^T x` subject to the rows and `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
}

/// Result of a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64, pivots: usize },
    Infeasible { pivots: usize },
    Unbounded { pivots: usize },
}

struct Tableau {
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    pivots: usize,
    max_pivots: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, obj: &mut [f64], r: usize, c: usize) {
        let pr = self.a[r][c];
        for v in self.a[r].iter_mut() {
            *v /= pr;
        }
        let row = self.a[r].clone();
        for (i, other) in self.a.iter_mut().enumerate() {
            let f = other[c];
            if i != r && f != 0.0 {
                for (o, v) in other.iter_mut().zip(&row) {
                    *o -= f * v;
                }
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (o, v) in obj.iter_mut().zip(&row) {
                *o -= f * v;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// With `skip_rays`, a column without a pivot row is set aside instead of reported
    /// unbounded; phase one is bounded, so such a column only carries rounding noise.
    fn run(&mut self, obj: &mut [f64], allowed: &[bool], skip_rays: bool) -> Result<Phase> {
        let rhs = self.ncols;
        let mut allowed = allowed.to_vec();
        loop {
            let Some(c) = (0..self.ncols).find(|&j| allowed[j] && obj[j] < -COST_TOL) else {
                return Ok(Phase::Optimal);
            };
            if self.pivots >= self.max_pivots {
                return Err(Error::Solver {
                    iterations: self.pivots,
                    reason: format!("pivot limit reached, entering column {c}"),
                });
            }
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.a.iter().enumerate() {
                if row[c] > PIVOT_TOL {
                    let ratio = row[rhs] / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((j, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                            if ratio < best && !tie || tie && self.basis[i] < self.basis[j] {
                                Some((i, ratio))
                            } else {
                                Some((j, best))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(obj, r, c),
                None if skip_rays => allowed[c] = false,
                None => return Ok(Phase::Unbounded),
            }
        }
    }
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, rows: vec![] }
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        self.rows.push((coeffs, rel, rhs));
        self
    }

    /// Solves the program with the two-phase method.
    pub fn solve(&self) -> Result<LpOutcome> {
        let n = self.objective.len();
        let m = self.rows.len();
        if let Some((i, _)) = self.rows.iter().enumerate().find(|(_, r)| r.0.len() != n) {
            return Err(Error::Domain(format!("row {i} has the wrong number of coefficients")));
        }
        // Normalize to nonnegative right-hand sides.
        let rows: Vec<(Vec<f64>, Relation, f64)> = self
            .rows
            .iter()
            .map(|(a, rel, b)| {
                if *b < 0.0 {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (a.iter().map(|v| -v).collect(), flipped, -b)
                } else {
                    (a.clone(), *rel, *b)
                }
            })
            .collect();
        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let ncols = n + n_slack + n_art;
        let mut a = vec![vec![0.0; ncols + 1]; m];
        let mut basis = vec![0; m];
        let mut is_art = vec![false; ncols];
        let (mut s, mut t) = (n, n + n_slack);
        for (i, (coeffs, rel, b)) in rows.iter().enumerate() {
            a[i][..n].copy_from_slice(coeffs);
            a[i][ncols] = *b;
            match rel {
                Relation::Le => {
                    a[i][s] = 1.0;
                    basis[i] = s;
                    s += 1;
                }
                Relation::Ge => {
                    a[i][s] = -1.0;
                    s += 1;
                    a[i][t] = 1.0;
                    basis[i] = t;
                    is_art[t] = true;
                    t += 1;
                }
                Relation::Eq => {
                    a[i][t] = 1.0;
                    basis[i] = t;
                    is_art[t] = true;
                    t += 1;
                }
            }
        }
        let mut tab = Tableau { a, basis, ncols, pivots: 0, max_pivots: 50 * (m + ncols) + 1000 };

        // Phase one: minimize the sum of artificial variables.
        let mut obj = vec![0.0; ncols + 1];
        for (i, row) in tab.a.iter().enumerate() {
            if is_art[tab.basis[i]] {
                for (o, v) in obj.iter_mut().zip(row) {
                    *o -= v;
                }
            }
        }
        for (j, o) in obj.iter_mut().enumerate().take(ncols) {
            if is_art[j] {
                *o = 0.0;
            }
        }
        let all = vec![true; ncols];
        tab.run(&mut obj, &all, true)?;
        let infeas = -obj[ncols];
        let scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);
        if infeas > 1e-9 * scale {
            return Ok(LpOutcome::Infeasible { pivots: tab.pivots });
        }
        // Drive remaining artificial variables out of the basis.
        let mut r = 0;
        while r < tab.a.len() {
            if is_art[tab.basis[r]] {
                let col = (0..ncols).find(|&j| !is_art[j] && tab.a[r][j].abs() > 1e-9);
                match col {
                    Some(c) => tab.pivot(&mut obj, r, c),
                    None => {
                        tab.a.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }

        // Phase two on the original objective.
        let mut obj = vec![0.0; ncols + 1];
        obj[..n].copy_from_slice(&self.objective);
        for (i, &b) in tab.basis.iter().enumerate() {
            let f = obj[b];
            if f != 0.0 {
                for (o, v) in obj.iter_mut().zip(&tab.a[i]) {
                    *o -= f * v;
                }
            }
        }
        let allowed: Vec<bool> = is_art.iter().map(|x| !x).collect();
        match tab.run(&mut obj, &allowed, false)? {
            Phase::Unbounded => Ok(LpOutcome::Unbounded { pivots: tab.pivots }),
            Phase::Optimal => {
                let mut x = vec![0.0; n];
                for (i, &b) in tab.basis.iter().enumerate() {
                    if b < n {
                        x[b] = tab.a[i][ncols];
                    }
                }
                let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                Ok(LpOutcome::Optimal { x, objective, pivots: tab.pivots })
            }
        }
    }
}
