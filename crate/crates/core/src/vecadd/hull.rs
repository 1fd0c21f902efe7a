//! Distance from a point to the convex hull of finitely many points.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lp;
use crate::error::{Error, Result};
use crate::hemimetric::{Norm, Point};

/// Frank–Wolfe stops once its duality gap is below this.
pub const FW_GAP_TOL: f64 = 1e-10;
pub const FW_MAX_ITERS: usize = 100_000;
/// Allowed disagreement between LP primal and dual objectives.
pub const LP_DUALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullProjection {
    pub point: Point,
    pub witness: Point,
    /// Convex weights over the generating points.
    pub weights: Vec<f64>,
    pub distance: f64,
    /// Frank–Wolfe duality gap (Euclidean) or primal-dual gap (sup).
    pub optimality_gap: f64,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn combine(w: &[f64], a: &[Point]) -> Point {
    let mut x = vec![0.0; a[0].len()];
    for (wi, ai) in w.iter().zip(a) {
        if *wi != 0.0 {
            for (xj, aj) in x.iter_mut().zip(ai) {
                *xj += wi * aj;
            }
        }
    }
    x
}

fn sub(x: &[f64], y: &[f64]) -> Point {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// Frank–Wolfe gap of `½‖x − p‖²` at `x`, and the best vertex.
fn fw_gap(x: &[f64], p: &[f64], a: &[Point]) -> (f64, usize, Vec<f64>) {
    let r = sub(x, p);
    let g: Vec<f64> = a.iter().map(|ai| dot(ai, &r)).collect();
    let mut s = 0;
    for (i, gi) in g.iter().enumerate() {
        if *gi < g[s] {
            s = i;
        }
    }
    (dot(x, &r) - g[s], s, g)
}

pub(super) fn check_points(p: &[f64], a: &[Point]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::Precondition("hull needs at least one point".into()));
    }
    for ai in a {
        if ai.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                found: ai.len(),
            });
        }
    }
    Ok(())
}

pub fn project_hull(p: &[f64], a: &[Point], norm: Norm) -> Result<HullProjection> {
    check_points(p, a)?;
    match norm {
        Norm::Euclidean => Ok(euclidean(p, a)),
        Norm::Sup => sup(p, a),
    }
}

fn euclidean(p: &[f64], a: &[Point]) -> HullProjection {
    let m = a.len();
    let d2: Vec<f64> = a.iter().map(|ai| dot(&sub(ai, p), &sub(ai, p))).collect();
    let start = (0..m).fold(0, |best, i| if d2[i] < d2[best] { i } else { best });
    let mut w = vec![0.0; m];
    w[start] = 1.0;
    let mut x = a[start].clone();

    for _ in 0..FW_MAX_ITERS {
        let (gap, s, g) = fw_gap(&x, p, a);
        if gap <= FW_GAP_TOL {
            break;
        }
        let xr = gap + g[s];
        let mut v = None;
        for i in 0..m {
            if w[i] > 0.0 && v.is_none_or(|vi: usize| g[i] > g[vi]) {
                v = Some(i);
            }
        }
        let v = v.expect("weights sum to one");
        let away_gain = g[v] - xr;
        let (d, gamma_max, toward) = if gap >= away_gain || w[v] >= 1.0 {
            (sub(&a[s], &x), 1.0, true)
        } else {
            (sub(&x, &a[v]), w[v] / (1.0 - w[v]), false)
        };
        let dd = dot(&d, &d);
        if dd == 0.0 {
            break;
        }
        let r = sub(&x, p);
        let gamma = (-dot(&r, &d) / dd).clamp(0.0, gamma_max);
        if gamma == 0.0 {
            break;
        }
        if toward {
            w.iter_mut().for_each(|wi| *wi *= 1.0 - gamma);
            w[s] += gamma;
        } else {
            w.iter_mut().for_each(|wi| *wi *= 1.0 + gamma);
            w[v] -= gamma;
            if gamma >= gamma_max {
                w[v] = 0.0;
            }
        }
        x = combine(&w, a);
    }

    if let Some((w2, x2)) = polish(p, a, &w, &x) {
        w = w2;
        x = x2;
    }
    let (gap, _, _) = fw_gap(&x, p, a);
    let distance = Norm::Euclidean.of(&sub(p, &x));
    HullProjection {
        point: p.to_vec(),
        witness: x,
        weights: w,
        distance,
        optimality_gap: gap.max(0.0),
    }
}

/// Exact projection onto the affine hull of the active face, kept only
/// when it stays inside the face and does not worsen the iterate.
fn polish(p: &[f64], a: &[Point], w: &[f64], x: &[f64]) -> Option<(Vec<f64>, Point)> {
    let active: Vec<usize> = (0..a.len()).filter(|&i| w[i] > 0.0).collect();
    if active.len() < 2 {
        return None;
    }
    let base = &a[active[0]];
    let n = p.len();
    let k = active.len() - 1;
    let d = DMatrix::from_fn(n, k, |r, c| a[active[c + 1]][r] - base[r]);
    let rhs = DVector::from_fn(n, |r, _| p[r] - base[r]);
    let mu = d.svd(true, true).solve(&rhs, 1e-14).ok()?;
    let mut w2 = vec![0.0; a.len()];
    w2[active[0]] = 1.0 - mu.sum();
    for c in 0..k {
        w2[active[c + 1]] = mu[c];
    }
    if w2.iter().any(|v| *v < -1e-15) {
        return None;
    }
    w2.iter_mut().for_each(|v| *v = v.max(0.0));
    let total: f64 = w2.iter().sum();
    w2.iter_mut().for_each(|v| *v /= total);
    let x2 = combine(&w2, a);
    let old = Norm::Euclidean.of(&sub(p, x));
    let new = Norm::Euclidean.of(&sub(p, &x2));
    let (gap_old, _, _) = fw_gap(x, p, a);
    let (gap_new, _, _) = fw_gap(&x2, p, a);
    (new <= old && gap_new <= gap_old.max(FW_GAP_TOL)).then_some((w2, x2))
}

/// `min t  s.t.  |p_j − Σ w_i a_ij| ≤ t, Σ w = 1, w ≥ 0`.
fn sup(p: &[f64], a: &[Point]) -> Result<HullProjection> {
    let (m, n) = (a.len(), p.len());
    // columns: w (m), t, slacks (2n)
    let cols = m + 1 + 2 * n;
    let mut rows = Vec::with_capacity(2 * n + 1);
    let mut rhs = Vec::with_capacity(2 * n + 1);
    for j in 0..n {
        for (s, sign) in [(0, 1.0), (1, -1.0)] {
            let mut row = vec![0.0; cols];
            for i in 0..m {
                row[i] = sign * a[i][j];
            }
            row[m] = -1.0;
            row[m + 1 + 2 * j + s] = 1.0;
            rows.push(row);
            rhs.push(sign * p[j]);
        }
    }
    let mut sum_row = vec![0.0; cols];
    sum_row[..m].iter_mut().for_each(|v| *v = 1.0);
    rows.push(sum_row);
    rhs.push(1.0);
    let mut c = vec![0.0; cols];
    c[m] = 1.0;

    let sol = lp::minimize(&c, &rows, &rhs)?;
    let gap = (sol.objective - sol.dual_objective).abs();
    if gap > LP_DUALITY_TOL * (1.0 + sol.objective.abs()) {
        return Err(Error::InvariantViolation(format!(
            "LP primal {} and dual {} disagree",
            sol.objective, sol.dual_objective
        )));
    }
    let mut w = sol.x[..m].to_vec();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    let x = combine(&w, a);
    Ok(HullProjection {
        point: p.to_vec(),
        distance: Norm::Sup.of(&sub(p, &x)),
        witness: x,
        weights: w,
        optimality_gap: gap,
    })
}
