use escape_rate::hemimetric::{dual_pairing, funk, hilbert, poincare_dist, rfunk, thompson};
use escape_rate::{MetricKind, MetricSpace};
use proptest::prelude::*;

fn orthant(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-4.0..4.0f64).prop_map(f64::exp), n)
}

fn half_plane() -> impl Strategy<Value = Vec<f64>> {
    (-10.0..10.0f64, -3.0..3.0f64).prop_map(|(re, t)| vec![re, t.exp()])
}

fn normed(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

const KINDS: [MetricKind; 5] = [
    MetricKind::OrthantFunk,
    MetricKind::OrthantReverseFunk,
    MetricKind::NormedEuclidean,
    MetricKind::NormedSup,
    MetricKind::PoincareHalfPlane,
];

type Triple = (Vec<f64>, Vec<f64>, Vec<f64>);

fn triple(kind: MetricKind, n: usize) -> BoxedStrategy<Triple> {
    match kind {
        MetricKind::OrthantFunk | MetricKind::OrthantReverseFunk => (orthant(n), orthant(n), orthant(n)).boxed(),
        MetricKind::NormedEuclidean | MetricKind::NormedSup => (normed(n), normed(n), normed(n)).boxed(),
        MetricKind::PoincareHalfPlane => (half_plane(), half_plane(), half_plane()).boxed(),
    }
}

fn kind_and_triple() -> impl Strategy<Value = (MetricSpace, Triple)> {
    (0..KINDS.len(), 1..=4usize).prop_flat_map(|(k, n)| {
        let kind = KINDS[k];
        let n = if kind == MetricKind::PoincareHalfPlane { 2 } else { n };
        (Just(MetricSpace::new(kind, n).unwrap()), triple(kind, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn triangle_inequality((space, (x, y, z)) in kind_and_triple()) {
        let d = |p: &[f64], q: &[f64]| space.distance(p, q).unwrap();
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12, "{:?}", space.kind);
    }

    #[test]
    fn weak_separation((space, (x, y, _)) in kind_and_triple()) {
        prop_assume!(x != y);
        let d = |p: &[f64], q: &[f64]| space.distance(p, q).unwrap();
        prop_assert!(d(&x, &y).max(d(&y, &x)) > 0.0);
    }

    #[test]
    fn symmetrizations_are_exact(x in orthant(3), y in orthant(3)) {
        let (f, g) = (funk(&x, &y).unwrap(), funk(&y, &x).unwrap());
        prop_assert_eq!(thompson(&x, &y).unwrap(), f.max(g));
        prop_assert_eq!(hilbert(&x, &y).unwrap(), f + g);
        prop_assert_eq!(rfunk(&x, &y).unwrap(), g);
    }

    #[test]
    fn funk_is_log_homogeneous(x in orthant(3), y in orthant(3), t in -5.0..5.0f64) {
        let alpha = t.exp();
        let ax: Vec<f64> = x.iter().map(|v| alpha * v).collect();
        let lhs = funk(&ax, &y).unwrap();
        prop_assert!((lhs - funk(&x, &y).unwrap() - t).abs() <= 1e-12);
    }

    #[test]
    fn funk_to_ones_on_simplex(x in orthant(4)) {
        let s = dual_pairing(&x).unwrap();
        let p: Vec<f64> = x.iter().map(|v| v / s).collect();
        let f = funk(&p, &[1.0; 4]).unwrap();
        prop_assert!(f <= 1e-15 && f >= -(4f64).ln() - 1e-15);
    }

    #[test]
    fn poincare_is_symmetric_and_shift_invariant(z in half_plane(), w in half_plane(), t in -5.0..5.0f64) {
        let d = poincare_dist(&z, &w).unwrap();
        prop_assert!((d - poincare_dist(&w, &z).unwrap()).abs() <= 1e-12);
        let shift = |p: &[f64]| vec![p[0] + t, p[1]];
        prop_assert!((d - poincare_dist(&shift(&z), &shift(&w)).unwrap()).abs() <= 1e-9 * (1.0 + d));
    }
}
