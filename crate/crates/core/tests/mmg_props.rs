mod common;

use common::{funk_game, identity, matrix_in, sparse_matrix};
use escape_rate::horizon::exact_value;
use escape_rate::linalg::spectral_radius;
use escape_rate::mmg::{jsr_bracket, jssr_bracket, product_game_line, product_game_value, ProductGame};
use escape_rate::{Matrix, MatrixNorm};
use proptest::prelude::*;

fn sides(n: usize) -> impl Strategy<Value = (Vec<Matrix>, Vec<Matrix>)> {
    (
        prop::collection::vec(sparse_matrix(n), 1..=2),
        prop::collection::vec(sparse_matrix(n), 1..=3),
    )
}

fn pair(n: usize) -> impl Strategy<Value = Vec<Matrix>> {
    prop::collection::vec(sparse_matrix(n), 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// With `x₀ = 1` the Funk payoff of the row-vector dynamics is the log
    /// of the largest column sum of the product.
    #[test]
    fn funk_engine_matches_product_game((min, max) in (2..=3usize).prop_flat_map(sides)) {
        let g = funk_game(min.clone(), max.clone());
        let p = ProductGame::new(min, max, MatrixNorm::OneInduced).unwrap();
        for k in 1..=4 {
            let funk_rate = exact_value(&g, k).unwrap() / k as f64;
            let product = product_game_value(&p, k).unwrap();
            prop_assert!((funk_rate.exp() - product.value.exp()).abs() <= 1e-9 * funk_rate.exp().max(1.0));
        }
    }

    #[test]
    fn scaling_max_shifts_value_and_keeps_line(
        (min, max) in (2..=3usize).prop_flat_map(sides),
        j in -3i32..=3,
        norm in prop_oneof![Just(MatrixNorm::OneInduced), Just(MatrixNorm::SupRow)],
    ) {
        // Powers of two scale every product exactly, so comparisons and
        // hence the tie-broken line of play are unaffected.
        let c = 2f64.powi(j);
        let scaled: Vec<Matrix> = max.iter().map(|m| m * c).collect();
        let k = 4;
        let (v, line) = product_game_line(&ProductGame::new(min.clone(), max, norm).unwrap(), k).unwrap();
        let (vs, line_s) = product_game_line(&ProductGame::new(min, scaled, norm).unwrap(), k).unwrap();
        prop_assert!((vs - v - c.ln()).abs() <= 1e-12);
        prop_assert_eq!(line, line_s);
    }

    #[test]
    fn line_value_equals_pruned_value((min, max) in (2..=3usize).prop_flat_map(sides), k in 1..=4usize) {
        let p = ProductGame::new(min, max, MatrixNorm::Spectral).unwrap();
        let (v, line) = product_game_line(&p, k).unwrap();
        prop_assert_eq!(line.len(), k);
        prop_assert!((v - product_game_value(&p, k).unwrap().value).abs() <= 1e-12);
    }

    #[test]
    fn brackets_are_nested_in_depth(set in (2..=3usize).prop_flat_map(pair)) {
        for f in [jsr_bracket, jssr_bracket] {
            let mut prev: Option<(f64, f64)> = None;
            for d in 1..=8 {
                let b = f(&set, d, MatrixNorm::Spectral).unwrap();
                prop_assert!(b.lower <= b.upper * (1.0 + 1e-12));
                if let Some((lo, hi)) = prev {
                    prop_assert!(b.lower >= lo && b.upper <= hi);
                }
                prev = Some((b.lower, b.upper));
            }
        }
    }

    /// Entries are kept away from zero: near-defective matrices converge too
    /// slowly in the Gelfand formula for a fixed 0.05 window at depth 12.
    #[test]
    fn singleton_upper_bound_approaches_spectral_radius(m in matrix_in(2, 0.5, 1.0)) {
        let b = jsr_bracket(std::slice::from_ref(&m), 12, MatrixNorm::Spectral).unwrap();
        let spr = spectral_radius(&m);
        prop_assert!((b.upper - spr).abs() <= 0.05, "{} vs {}", b.upper, spr);
        prop_assert!((b.lower - spr).abs() <= 1e-9);
    }
}

#[test]
fn identity_products_have_rate_zero() {
    let p = ProductGame::new(vec![identity(2)], vec![identity(2)], MatrixNorm::Spectral).unwrap();
    assert!(product_game_value(&p, 5).unwrap().value.abs() <= 1e-15);
}
