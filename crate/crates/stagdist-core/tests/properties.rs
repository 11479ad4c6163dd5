//! Randomized property checks for the empirical-distribution primitives.

use proptest::prelude::*;

use stagdist_core::edf::{rank_transform, Edf, WeightedCdf};

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1000.0..1000.0f64, 1..50)
}

proptest! {
    #[test]
    fn cdf_is_a_valid_distribution(xs in sample(), y in -2000.0..2000.0f64) {
        let edf = Edf::new(xs).unwrap();
        let f = edf.cdf_at(y);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert_eq!(edf.cdf_at(edf.min() - 1.0), 0.0);
        prop_assert_eq!(edf.cdf_at(edf.max()), 1.0);
        // Right-continuity with monotone steps: nudging y upward never
        // lowers the CDF.
        prop_assert!(edf.cdf_at(y + 1e-6) >= f);
    }

    #[test]
    fn quantile_is_monotone_and_inverts_cdf(xs in sample()) {
        let edf = Edf::new(xs).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=20 {
            let tau = k as f64 / 20.0;
            let q = edf.quantile(tau).unwrap();
            prop_assert!(q >= prev);
            prop_assert!(edf.cdf_at(q) >= tau - 1e-9);
            prev = q;
        }
    }

    #[test]
    fn quantile_is_location_equivariant(xs in sample(), c in -50.0..50.0f64, k in 1..=20usize) {
        let tau = k as f64 / 20.0;
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let base = Edf::new(xs).unwrap().quantile(tau).unwrap();
        let moved = Edf::new(shifted).unwrap().quantile(tau).unwrap();
        prop_assert!((moved - (base + c)).abs() < 1e-9);
    }

    #[test]
    fn uniform_weights_reduce_to_the_plain_edf(xs in sample(), k in 1..=20usize) {
        let tau = k as f64 / 20.0;
        let weights = vec![1.0; xs.len()];
        let weighted = WeightedCdf::new(&xs, &weights).unwrap();
        let edf = Edf::new(xs).unwrap();
        prop_assert_eq!(weighted.quantile(tau).unwrap(), edf.quantile(tau).unwrap());
        for y in edf.sorted() {
            prop_assert!((weighted.cdf_at(*y) - edf.cdf_at(*y)).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_transform_onto_itself_is_the_identity(xs in sample()) {
        let edf = Edf::new(xs.clone()).unwrap();
        let mapped = rank_transform(&edf, &edf, &xs);
        for (v, m) in xs.iter().zip(&mapped) {
            prop_assert_eq!(*v, *m);
        }
    }

    #[test]
    fn rank_transform_stays_in_target_support(xs in sample(), ys in sample(), vs in sample()) {
        let target = Edf::new(xs).unwrap();
        let reference = Edf::new(ys).unwrap();
        for m in rank_transform(&target, &reference, &vs) {
            prop_assert!(m >= target.min() && m <= target.max());
        }
    }
}
