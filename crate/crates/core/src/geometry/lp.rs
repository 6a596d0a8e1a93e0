//! Dense bounded-variable simplex.
//!
//! Problems here are tiny (at most a few dozen rows and columns), so a full
//! tableau with Bland's rule is the right tool: no factorization updates, no
//! scaling heuristics, deterministic pivots.
//!
//! Form solved: maximize `obj . w` subject to `rows * w = rhs` and
//! `0 <= w_j <= upper_j`. Feasibility is established in a first phase with
//! one artificial variable per row; afterwards artificials are frozen at
//! zero by setting their upper bound to zero.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex failed to converge within the iteration budget")]
    IterationLimit,
}

const COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 20_000;

struct Tableau {
    a: DMatrix<f64>,
    b: Vec<f64>,
    upper: Vec<f64>,
    basic: Vec<usize>,
    at_upper: Vec<bool>,
    ncols: usize,
}

impl Tableau {
    fn basic_values(&self) -> Vec<f64> {
        let m = self.b.len();
        let mut x = self.b.clone();
        for j in 0..self.ncols {
            if self.at_upper[j] && !self.is_basic(j) && self.upper[j] > 0.0 {
                for r in 0..m {
                    x[r] -= self.a[(r, j)] * self.upper[j];
                }
            }
        }
        x
    }

    fn is_basic(&self, j: usize) -> bool {
        self.basic.contains(&j)
    }

    fn var_values(&self) -> Vec<f64> {
        let xb = self.basic_values();
        let mut w = vec![0.0; self.ncols];
        for j in 0..self.ncols {
            if self.at_upper[j] {
                w[j] = self.upper[j];
            }
        }
        for (r, &j) in self.basic.iter().enumerate() {
            w[j] = xb[r];
        }
        w
    }

    fn reduced_costs(&self, obj: &[f64]) -> Vec<f64> {
        let mut z = obj.to_vec();
        for (r, &bj) in self.basic.iter().enumerate() {
            let cb = obj[bj];
            if cb != 0.0 {
                for j in 0..self.ncols {
                    z[j] -= cb * self.a[(r, j)];
                }
            }
        }
        z
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let m = self.b.len();
        let piv = self.a[(row, col)];
        for j in 0..self.ncols {
            self.a[(row, j)] /= piv;
        }
        self.b[row] /= piv;
        for r in 0..m {
            if r == row {
                continue;
            }
            let f = self.a[(r, col)];
            if f != 0.0 {
                for j in 0..self.ncols {
                    self.a[(r, j)] -= f * self.a[(row, j)];
                }
                self.b[r] -= f * self.b[row];
            }
        }
        self.basic[row] = col;
    }

    /// Runs Bland-rule iterations for the given objective until optimal.
    fn optimize(&mut self, obj: &[f64]) -> Result<(), LpError> {
        let m = self.b.len();
        let cost_tol = COST_TOL * (1.0 + obj.iter().fold(0.0f64, |a, &c| a.max(c.abs())));
        for _ in 0..MAX_ITERS {
            let xb = self.basic_values();
            let z = self.reduced_costs(obj);
            let mut entering = None;
            for j in 0..self.ncols {
                if self.is_basic(j) || self.upper[j] <= 0.0 {
                    continue;
                }
                let improves = if self.at_upper[j] {
                    z[j] < -cost_tol
                } else {
                    z[j] > cost_tol
                };
                if improves {
                    entering = Some(j);
                    break; // Bland: smallest eligible index
                }
            }
            let Some(j) = entering else {
                return Ok(());
            };
            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };

            // Ratio test: how far can w_j move before a bound is hit.
            let mut t_best = self.upper[j];
            let mut leave: Option<usize> = None;
            for r in 0..m {
                let coef = self.a[(r, j)] * dir;
                let limit = if coef > PIVOT_TOL {
                    xb[r].max(0.0) / coef
                } else if coef < -PIVOT_TOL {
                    let ub = self.upper[self.basic[r]];
                    if ub.is_infinite() {
                        continue;
                    }
                    (ub - xb[r]).max(0.0) / (-coef)
                } else {
                    continue;
                };
                let better = match leave {
                    None => limit < t_best - 1e-12,
                    Some(lr) => {
                        limit < t_best - 1e-12
                            || (limit < t_best + 1e-12 && self.basic[r] < self.basic[lr])
                    }
                };
                if better {
                    t_best = limit;
                    leave = Some(r);
                }
            }

            if t_best.is_infinite() {
                return Err(LpError::Unbounded);
            }
            match leave {
                None => {
                    // Bound flip: the entering variable crosses to its other bound.
                    self.at_upper[j] = !self.at_upper[j];
                }
                Some(r) => {
                    let coef = self.a[(r, j)] * dir;
                    let leaving = self.basic[r];
                    // Leaving variable lands on the bound it ran into.
                    self.at_upper[leaving] = coef < 0.0;
                    let entering_from_upper = self.at_upper[j];
                    self.pivot(r, j);
                    if entering_from_upper {
                        self.at_upper[j] = false;
                    }
                }
            }
        }
        Err(LpError::IterationLimit)
    }
}

/// Maximizes `obj . w` over `rows * w = rhs`, `0 <= w <= upper`.
///
/// Returns the optimal value and one optimizer (a vertex; ties are resolved
/// by the deterministic pivot order).
pub fn maximize_bounded(
    obj: &[f64],
    rows: &DMatrix<f64>,
    rhs: &[f64],
    upper: &[f64],
) -> Result<(f64, Vec<f64>), LpError> {
    let m = rows.nrows();
    let n = rows.ncols();
    assert_eq!(obj.len(), n);
    assert_eq!(upper.len(), n);
    assert_eq!(rhs.len(), m);

    let total = n + m;
    let mut a = DMatrix::zeros(m, total);
    let mut b = vec![0.0; m];
    for r in 0..m {
        let flip = if rhs[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            a[(r, j)] = flip * rows[(r, j)];
        }
        a[(r, n + r)] = 1.0;
        b[r] = flip * rhs[r];
    }
    let mut up = upper.to_vec();
    up.extend(std::iter::repeat_n(f64::INFINITY, m));

    let mut t = Tableau {
        a,
        b,
        upper: up,
        basic: (n..total).collect(),
        at_upper: vec![false; total],
        ncols: total,
    };

    // Phase 1: drive the artificial variables to zero.
    if m > 0 {
        let mut phase1 = vec![0.0; total];
        for c in phase1.iter_mut().skip(n) {
            *c = -1.0;
        }
        t.optimize(&phase1)?;
        let w = t.var_values();
        let infeas: f64 = w[n..].iter().sum();
        let scale = 1.0 + rhs.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        if infeas > 1e-7 * scale {
            return Err(LpError::Infeasible);
        }
        for u in t.upper.iter_mut().skip(n) {
            *u = 0.0;
        }
    }

    // Phase 2: the real objective.
    let mut phase2 = obj.to_vec();
    phase2.extend(std::iter::repeat_n(0.0, m));
    t.optimize(&phase2)?;

    let w = t.var_values();
    let value = obj.iter().zip(&w).map(|(c, x)| c * x).sum();
    Ok((value, w[..n].to_vec()))
}
