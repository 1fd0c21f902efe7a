mod common;

use common::conical_game;
use escape_rate::horizon::{exact_value, exact_value_unpruned, fekete, one_step_alpha};
use escape_rate::strategies::{exhaustive_max_replies, min_qcyclic};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn values_are_subadditive(g in conical_game(3, 3)) {
        let est = fekete(&g, 8).unwrap();
        let s = &est.values;
        for k in 1..8 {
            for l in 1..=(8 - k) {
                prop_assert!(s[k + l - 1] <= s[k - 1] + s[l - 1] + 1e-9, "k={} l={}", k, l);
            }
        }
    }

    #[test]
    fn one_step_alpha_is_a_per_round_floor(g in conical_game(3, 3)) {
        let alpha = one_step_alpha(&g);
        let est = fekete(&g, 8).unwrap();
        for (i, s) in est.values.iter().enumerate() {
            prop_assert!(*s >= (i + 1) as f64 * alpha - 1e-9);
        }
    }

    #[test]
    fn pruning_does_not_change_values(g in conical_game(3, 3), k in 1..=5usize) {
        let pruned = exact_value(&g, k).unwrap();
        let plain = exact_value_unpruned(&g, k).unwrap();
        prop_assert!((pruned - plain).abs() <= 1e-12, "{} vs {}", pruned, plain);
    }

    #[test]
    fn horizon_strategy_holds_its_value(g in conical_game(2, 3), q in 1..=4usize) {
        let s_q = exact_value(&g, q).unwrap();
        let sigma = min_qcyclic(&g, q).unwrap();
        let worst = exhaustive_max_replies(&g, &sigma, q).unwrap();
        prop_assert!(worst[q - 1] <= s_q + 1e-9, "{} > {}", worst[q - 1], s_q);
    }
}
