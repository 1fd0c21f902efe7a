//! Dense two-phase tableau simplex for small problems
//! `min cᵀx  s.t.  Ax = b, x ≥ 0`, with Bland's rule.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.width]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.rows[r][j];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[j];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        self.basis[r] = j;
    }

    /// Runs simplex pivots for `cost`, letting only columns `< enter_limit` enter.
    fn optimize(&mut self, cost: &[f64], enter_limit: usize) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..enter_limit).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let rc = cost[j]
                    - self
                        .rows
                        .iter()
                        .zip(&self.basis)
                        .map(|(row, &bj)| cost[bj] * row[j])
                        .sum::<f64>();
                rc < -EPS
            });
            let Some(j) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let coef = self.rows[r][j];
                if coef > EPS {
                    let ratio = self.rhs(r) / coef;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - EPS || (ratio <= lratio + EPS && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::InvariantViolation("linear program is unbounded".into()));
            };
            self.pivot(r, j);
        }
        Err(Error::InvariantViolation("simplex pivot limit reached".into()))
    }
}

pub(crate) fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let (m, n) = (a.len(), c.len());
    let sign: Vec<f64> = b.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
    let width = n + m;
    let rows = (0..m)
        .map(|r| {
            let mut row = vec![0.0; width + 1];
            for j in 0..n {
                row[j] = sign[r] * a[r][j];
            }
            row[n + r] = 1.0;
            row[width] = sign[r] * b[r];
            row
        })
        .collect();
    let mut t = Tableau {
        rows,
        basis: (n..width).collect(),
        width,
    };

    let mut phase1 = vec![0.0; width];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    t.optimize(&phase1, width)?;
    let infeasibility: f64 = (0..m).filter(|&r| t.basis[r] >= n).map(|r| t.rhs(r)).sum();
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeasibility > 1e-9 * scale {
        return Err(Error::Precondition("linear program is infeasible".into()));
    }

    let mut redundant = vec![false; m];
    #[allow(clippy::needless_range_loop)] // pivoting mutates `t` while indexing by row
    for r in 0..m {
        if t.basis[r] >= n {
            match (0..n).find(|&j| t.rows[r][j].abs() > 1e-9) {
                Some(j) => t.pivot(r, j),
                None => redundant[r] = true,
            }
        }
    }

    let mut phase2 = c.to_vec();
    phase2.resize(width, 0.0);
    t.optimize(&phase2, n)?;

    let mut x = vec![0.0; n];
    for (r, &j) in t.basis.iter().enumerate() {
        if j < n {
            x[j] = t.rhs(r).max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();

    // Bᵀy = c_B over the non-redundant rows, in the sign-normalized system.
    let live: Vec<usize> = (0..m).filter(|&r| !redundant[r]).collect();
    let k = live.len();
    let bt = DMatrix::from_fn(k, k, |i, l| sign[live[l]] * a[live[l]][t.basis[live[i]]]);
    let cb = DVector::from_fn(k, |i, _| c[t.basis[live[i]]]);
    let y_live = bt
        .lu()
        .solve(&cb)
        .ok_or_else(|| Error::InvariantViolation("singular simplex basis".into()))?;
    let mut dual = vec![0.0; m];
    for (i, &r) in live.iter().enumerate() {
        dual[r] = sign[r] * y_live[i];
    }
    let dual_objective = b.iter().zip(&dual).map(|(bi, yi)| bi * yi).sum();
    Ok(LpSolution {
        x,
        objective,
        dual_objective,
    })
}
