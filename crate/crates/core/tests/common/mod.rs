//! Instance generators shared by the integration tests.
#![allow(dead_code)]

use escape_rate::linalg::from_rows;
use escape_rate::{GameInstance, MapFamily, Matrix, MetricKind, MetricSpace};
use proptest::prelude::*;

pub fn mat(rows: &[&[f64]]) -> Matrix {
    from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

pub fn funk_game(min: Vec<Matrix>, max: Vec<Matrix>) -> GameInstance {
    let n = min[0].nrows();
    let space = MetricSpace::new(MetricKind::OrthantFunk, n).unwrap();
    let family = MapFamily::nonneg_matrices(min, max).unwrap();
    GameInstance::new(space, family, None, false).unwrap()
}

pub fn one_player(max: Vec<Matrix>) -> GameInstance {
    let n = max[0].nrows();
    funk_game(vec![identity(n)], max)
}

pub fn translation_game(min: Vec<Vec<f64>>, max: Vec<Vec<f64>>, kind: MetricKind) -> GameInstance {
    let space = MetricSpace::new(kind, min[0].len()).unwrap();
    let family = MapFamily::translations(min, max).unwrap();
    GameInstance::new(space, family, None, false).unwrap()
}

/// `n`×`n` matrix with entries in `[lo, hi]`.
pub fn matrix_in(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(lo..=hi, n * n).prop_map(move |v| Matrix::from_row_slice(n, n, &v))
}

/// Nonnegative matrix with some exact zeros but every column nonzero.
pub fn sparse_matrix(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.1..3.0f64], n * n).prop_map(move |v| {
        let mut m = Matrix::from_row_slice(n, n, &v);
        for j in 0..n {
            if m.column(j).iter().all(|x| *x == 0.0) {
                m[(j, j)] = 1.0;
            }
        }
        m
    })
}

/// Conical Funk games with `n ≤ max_n` and at most `max_actions` per side.
pub fn conical_game(max_n: usize, max_actions: usize) -> impl Strategy<Value = GameInstance> {
    (1..=max_n, 1..=max_actions, 1..=max_actions, any::<bool>()).prop_flat_map(|(n, na, nb, max_first)| {
        let side = move |k| prop::collection::vec(sparse_matrix(n), k);
        (side(na), side(nb)).prop_map(move |(a, b)| {
            let space = MetricSpace::new(MetricKind::OrthantFunk, n).unwrap();
            let family = MapFamily::nonneg_matrices(a, b).unwrap();
            GameInstance::new(space, family, None, max_first).unwrap()
        })
    })
}

/// Strictly positive two-player games; images of the simplex stay well inside.
pub fn positive_game(n: usize, max_actions: usize) -> impl Strategy<Value = GameInstance> {
    (1..=max_actions, 1..=max_actions).prop_flat_map(move |(na, nb)| {
        let side = move |k| prop::collection::vec(matrix_in(n, 0.5, 2.0), k);
        (side(na), side(nb)).prop_map(|(a, b)| funk_game(a, b))
    })
}
