//! Vector addition games: `x_k = x_{k−1} + a_k + b_k` in a normed space.
//!
//! The value is `λ = max_b dist(−b, co A)`. Max wins it with the constant
//! action `b*`; Min keeps `φ(x) = dist(x, −(n+1)·co A)` from growing faster
//! than `λ` per step.

mod hull;
mod lp;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hemimetric::{Norm, Point};

pub use hull::{project_hull, HullProjection, FW_GAP_TOL, FW_MAX_ITERS, LP_DUALITY_TOL};

/// Hull membership tolerance for tit-for-tat and witness checks.
pub const MEMBERSHIP_TOL: f64 = 1e-8;
/// Allowed error in `min_a ℓ(a) + max_b ℓ(b) = λ`.
pub const EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub fw_gap: f64,
    pub lp_duality: f64,
    pub membership: f64,
    pub eigen: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fw_gap: FW_GAP_TOL,
            lp_duality: LP_DUALITY_TOL,
            membership: MEMBERSHIP_TOL,
            eigen: EIGEN_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VecAddSolution {
    pub lambda: f64,
    /// Index of `b*` in the Max action list.
    pub b_star: usize,
    pub b_star_vector: Point,
    /// Point of `co A` nearest to `−b*`.
    pub a_star: Point,
    /// Unit linear form with `Sℓ = λ + ℓ`, Euclidean and `λ > 0` only.
    pub ell: Option<Point>,
    /// `min_a ℓ(a) + max_b ℓ(b) − λ`.
    pub eigen_residual: Option<f64>,
    /// `−b ∈ co A` per Max action; reported when `λ = 0`.
    pub containment: Option<Vec<bool>>,
    pub norm: Norm,
    pub tolerances: Tolerances,
    #[serde(skip)]
    min_actions: Vec<Point>,
}

impl VecAddSolution {
    pub fn dim(&self) -> usize {
        self.b_star_vector.len()
    }

    /// `φ(x) = dist(x, −(n+1)·co A)`.
    pub fn phi(&self, x: &[f64]) -> Result<f64> {
        phi_value(x, &self.min_actions, self.dim(), self.norm)
    }
}

fn neg(x: &[f64]) -> Point {
    x.iter().map(|v| -v).collect()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn check_actions(a: &[Point], b: &[Point]) -> Result<usize> {
    let n = a
        .first()
        .or(b.first())
        .map(Vec::len)
        .ok_or_else(|| Error::Precondition("action sets must be nonempty".into()))?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("action sets must be nonempty".into()));
    }
    for v in a.iter().chain(b) {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    Ok(n)
}

pub fn solve(a: &[Point], b: &[Point], norm: Norm) -> Result<VecAddSolution> {
    check_actions(a, b)?;
    let projections: Vec<Result<HullProjection>> = b.par_iter().map(|bj| project_hull(&neg(bj), a, norm)).collect();
    let projections = projections.into_iter().collect::<Result<Vec<_>>>()?;
    let lambda = projections.iter().map(|p| p.distance).fold(f64::NEG_INFINITY, f64::max);
    let b_star = projections
        .iter()
        .position(|p| p.distance >= lambda - 1e-12)
        .expect("nonempty");
    let a_star = projections[b_star].witness.clone();
    let bv = b[b_star].clone();

    let mut ell = None;
    let mut eigen_residual = None;
    let mut containment = None;
    if norm == Norm::Euclidean && lambda > EIGEN_TOL {
        let s: Point = a_star.iter().zip(&bv).map(|(x, y)| x + y).collect();
        let len = Norm::Euclidean.of(&s);
        let l: Point = s.iter().map(|v| v / len).collect();
        let min_a = a.iter().map(|ai| dot(&l, ai)).fold(f64::INFINITY, f64::min);
        let max_b = b.iter().map(|bj| dot(&l, bj)).fold(f64::NEG_INFINITY, f64::max);
        let r = min_a + max_b - lambda;
        if r.abs() > EIGEN_TOL {
            return Err(Error::InvariantViolation(format!(
                "eigen form drift {} differs from lambda {lambda}",
                min_a + max_b
            )));
        }
        ell = Some(l);
        eigen_residual = Some(r);
    }
    if lambda <= MEMBERSHIP_TOL {
        containment = Some(projections.iter().map(|p| p.distance <= MEMBERSHIP_TOL).collect());
    }
    Ok(VecAddSolution {
        lambda,
        b_star,
        b_star_vector: bv,
        a_star,
        ell,
        eigen_residual,
        containment,
        norm,
        tolerances: Tolerances::default(),
        min_actions: a.to_vec(),
    })
}

fn scaled(a: &[Point], c: f64) -> Vec<Point> {
    a.iter().map(|ai| ai.iter().map(|v| c * v).collect()).collect()
}

/// `φ(x) = dist(x, −(n+1)·co A)`.
pub fn phi_value(x: &[f64], a: &[Point], n: usize, norm: Norm) -> Result<f64> {
    let hull = scaled(a, -((n + 1) as f64));
    Ok(project_hull(x, &hull, norm)?.distance)
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiCheckReport {
    pub lambda: f64,
    pub samples: usize,
    /// Largest `Sφ(x) − λ − φ(x)` observed.
    pub worst_excess: f64,
    pub worst_point: Option<Point>,
    pub holds: bool,
}

/// Samples `x` and checks `min_a max_b φ(x + a + b) ≤ λ + φ(x) + 1e−9`.
pub fn phi_shapley_check(a: &[Point], b: &[Point], norm: Norm, samples: usize, seed: u64) -> Result<PhiCheckReport> {
    let n = check_actions(a, b)?;
    let lambda = solve(a, b, norm)?.lambda;
    let radius = a.iter().chain(b).map(|v| norm.of(v)).fold(1.0, f64::max) * 2.0 * (n + 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Point> = (0..samples)
        .map(|_| {
            (0..n)
                .map(|_| radius * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect()
        })
        .collect();
    let excess: Vec<Result<f64>> = xs
        .par_iter()
        .map(|x| {
            let mut s_phi = f64::INFINITY;
            for ai in a {
                let mut worst = f64::NEG_INFINITY;
                for bj in b {
                    let y: Point = (0..n).map(|j| x[j] + ai[j] + bj[j]).collect();
                    worst = worst.max(phi_value(&y, a, n, norm)?);
                }
                s_phi = s_phi.min(worst);
            }
            Ok(s_phi - lambda - phi_value(x, a, n, norm)?)
        })
        .collect();
    let mut worst = (f64::NEG_INFINITY, None);
    for (e, x) in excess.into_iter().zip(&xs) {
        let e = e?;
        if e > worst.0 {
            worst = (e, Some(x.clone()));
        }
    }
    Ok(PhiCheckReport {
        lambda,
        samples,
        worst_excess: worst.0,
        worst_point: worst.1,
        holds: worst.0 <= 1e-9,
    })
}

/// For `c ∈ (n+1)·co A`, the lowest-index `â ∈ A` with `c − â ∈ n·co A`.
pub fn sf_witness(c: &[f64], a: &[Point], n: usize) -> Result<usize> {
    hull::check_points(c, a)?;
    let outer = project_hull(c, &scaled(a, (n + 1) as f64), Norm::Euclidean)?;
    if outer.distance > MEMBERSHIP_TOL {
        return Err(Error::Precondition(format!(
            "point lies at distance {} from the scaled hull",
            outer.distance
        )));
    }
    let inner = scaled(a, n as f64);
    for (i, ai) in a.iter().enumerate() {
        let r: Point = c.iter().zip(ai).map(|(x, y)| x - y).collect();
        if project_hull(&r, &inner, Norm::Euclidean)?.distance <= MEMBERSHIP_TOL {
            return Ok(i);
        }
    }
    Err(Error::NoWitness(
        "no action leaves a residual in the scaled hull within tolerance".into(),
    ))
}
