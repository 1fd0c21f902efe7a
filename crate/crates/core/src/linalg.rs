//! Small dense matrix helpers on top of `nalgebra`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub type Matrix = DMatrix<f64>;

/// Builds a square matrix from row slices.
pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    Matrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Row vector times matrix: `x ↦ xM`.
pub fn row_times(x: &[f64], m: &Matrix) -> Vec<f64> {
    (0..m.ncols())
        .map(|j| x.iter().enumerate().map(|(i, xi)| xi * m[(i, j)]).sum())
        .collect()
}

/// Induced matrix norms used for product payoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixNorm {
    /// Maximum absolute row sum (induced by the sup vector norm on columns).
    SupRow,
    /// Maximum absolute column sum. Matches `‖1·M‖_∞` for nonnegative `M`
    /// under the row-vector convention.
    OneInduced,
    /// Largest singular value.
    Spectral,
}

impl MatrixNorm {
    pub fn of(self, m: &Matrix) -> f64 {
        match self {
            MatrixNorm::SupRow => (0..m.nrows())
                .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            MatrixNorm::OneInduced => (0..m.ncols())
                .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            MatrixNorm::Spectral => spectral_norm(m),
        }
    }
}

pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    m.clone().singular_values().iter().fold(0.0, |a, &s| a.max(s))
}

/// Spectral radius: largest eigenvalue modulus.
pub fn spectral_radius(m: &Matrix) -> f64 {
    if m.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    m.complex_eigenvalues().iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn min_row_sum(m: &Matrix) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).sum()).fold(f64::INFINITY, f64::min)
}

pub fn is_nonnegative(m: &Matrix) -> bool {
    m.iter().all(|v| *v >= 0.0)
}
