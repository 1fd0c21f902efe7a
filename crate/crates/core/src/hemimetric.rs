//! Hemi-metrics and norms on the state spaces of escape rate games.
//!
//! A hemi-metric satisfies the triangle inequality and weak separation but
//! may be asymmetric and take negative values. Points are plain coordinate
//! slices; orthant points must be strictly positive, half-plane points are
//! `(Re z, Im z)` with `Im z > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of a state space.
pub type Point = Vec<f64>;

/// Default tolerance for floating comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    OrthantFunk,
    OrthantReverseFunk,
    NormedEuclidean,
    NormedSup,
    PoincareHalfPlane,
}

impl MetricKind {
    pub fn is_orthant(self) -> bool {
        matches!(self, MetricKind::OrthantFunk | MetricKind::OrthantReverseFunk)
    }

    pub fn is_normed(self) -> bool {
        matches!(self, MetricKind::NormedEuclidean | MetricKind::NormedSup)
    }
}

/// Norm selector for vector spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    Euclidean,
    Sup,
}

impl Norm {
    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Sup => v.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
        }
    }
}

/// The hemi-metric space a game is played on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpace {
    pub kind: MetricKind,
    pub dim: usize,
}

impl MetricSpace {
    pub fn new(kind: MetricKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Precondition("dimension must be positive".into()));
        }
        if kind == MetricKind::PoincareHalfPlane && dim != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: dim,
            });
        }
        Ok(Self { kind, dim })
    }

    /// Checks that `x` is a legal point of this space.
    pub fn validate(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim, x)?;
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPoint(format!("coordinate {i} is not finite")));
        }
        match self.kind {
            MetricKind::OrthantFunk | MetricKind::OrthantReverseFunk => check_positive(x),
            MetricKind::PoincareHalfPlane => {
                if x[1] > 0.0 {
                    Ok(())
                } else {
                    Err(Error::NonPositiveCoordinate { index: 1, value: x[1] })
                }
            }
            MetricKind::NormedEuclidean | MetricKind::NormedSup => Ok(()),
        }
    }

    /// `d(x, y)` for the hemi-metric of this space. Inputs are validated.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.validate(x)?;
        self.validate(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    /// `d(x, y)` without validation; callers guarantee both points are legal.
    pub fn distance_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            MetricKind::OrthantFunk => funk_raw(x, y),
            MetricKind::OrthantReverseFunk => funk_raw(y, x),
            MetricKind::NormedEuclidean => norm_dist_raw(x, y, Norm::Euclidean),
            MetricKind::NormedSup => norm_dist_raw(x, y, Norm::Sup),
            MetricKind::PoincareHalfPlane => poincare_raw(x, y),
        }
    }

    /// Default base point: all-ones on the orthant, origin for normed
    /// spaces, `i` on the half-plane.
    pub fn default_base_point(&self) -> Point {
        match self.kind {
            MetricKind::OrthantFunk | MetricKind::OrthantReverseFunk => vec![1.0; self.dim],
            MetricKind::NormedEuclidean | MetricKind::NormedSup => vec![0.0; self.dim],
            MetricKind::PoincareHalfPlane => vec![0.0, 1.0],
        }
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

fn check_same_dim(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    check_dim(x.len(), y)
}

pub(crate) fn check_positive(x: &[f64]) -> Result<()> {
    match x.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        Some(index) => Err(Error::NonPositiveCoordinate { index, value: x[index] }),
        None => Ok(()),
    }
}

fn check_orthant_pair(x: &[f64], y: &[f64]) -> Result<()> {
    check_same_dim(x, y)?;
    check_positive(x)?;
    check_positive(y)
}

/// Funk hemi-metric on the open orthant: `log max_i x_i / y_i`.
pub fn funk(x: &[f64], y: &[f64]) -> Result<f64> {
    check_orthant_pair(x, y)?;
    Ok(funk_raw(x, y))
}

/// Reverse Funk hemi-metric: `funk(y, x)`.
pub fn rfunk(x: &[f64], y: &[f64]) -> Result<f64> {
    check_orthant_pair(x, y)?;
    Ok(funk_raw(y, x))
}

/// Thompson's part metric `‖log x − log y‖_∞`.
pub fn thompson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_orthant_pair(x, y)?;
    Ok(thompson_raw(x, y))
}

/// Hilbert's projective metric `funk(x, y) + funk(y, x)`.
pub fn hilbert(x: &[f64], y: &[f64]) -> Result<f64> {
    check_orthant_pair(x, y)?;
    Ok(funk_raw(x, y) + funk_raw(y, x))
}

/// Distance induced by a norm.
pub fn norm_dist(x: &[f64], y: &[f64], which: Norm) -> Result<f64> {
    check_same_dim(x, y)?;
    Ok(norm_dist_raw(x, y, which))
}

/// Distance on the upper half-plane, `2 asinh(|z − w| / sqrt(Im z · Im w))`.
pub fn poincare_dist(z: &[f64], w: &[f64]) -> Result<f64> {
    check_dim(2, z)?;
    check_dim(2, w)?;
    for p in [z, w] {
        if !(p[1] > 0.0) {
            return Err(Error::NonPositiveCoordinate { index: 1, value: p[1] });
        }
    }
    Ok(poincare_raw(z, w))
}

/// Pairing with the all-ones dual vector.
pub fn dual_pairing(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    Ok(x.iter().sum())
}

// Log-space evaluation keeps long products from overflowing the ratio.
#[inline]
pub(crate) fn funk_raw(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| a.ln() - b.ln())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Funk distance from precomputed logarithms.
#[inline]
pub(crate) fn funk_logs(lx: &[f64], ly: &[f64]) -> f64 {
    lx.iter().zip(ly).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max)
}

#[inline]
pub(crate) fn thompson_raw(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a.ln() - b.ln()).abs())
        .fold(0.0, f64::max)
}

#[inline]
pub(crate) fn norm_dist_raw(x: &[f64], y: &[f64], which: Norm) -> f64 {
    match which {
        Norm::Euclidean => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        Norm::Sup => x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs())),
    }
}

#[inline]
fn poincare_raw(z: &[f64], w: &[f64]) -> f64 {
    let diff = ((z[0] - w[0]).powi(2) + (z[1] - w[1]).powi(2)).sqrt();
    2.0 * (diff / (z[1].sqrt() * w[1].sqrt())).asinh()
}
