use num_bigint::BigInt;
use proptest::prelude::*;

use dmt::closed_form::{dmt_at, dmt_curve, is_rayleigh_equivalent, max_diversity, ChannelTriple};
use dmt::exponent::{dmt_via_greedy, dmt_via_lp, triple_dims};
use dmt::Rational;

fn triple() -> impl Strategy<Value = ChannelTriple> {
    (1u32..=8, 1u32..=8, 1u32..=8).prop_map(|(a, b, c)| ChannelTriple::new(a, b, c).unwrap())
}

proptest! {
    #[test]
    fn curve_depends_only_on_multiset(t in triple()) {
        let base = dmt_curve(t);
        for p in t.permutations() {
            prop_assert_eq!(&dmt_curve(p), &base);
        }
    }

    #[test]
    fn curve_shape_holds(t in triple()) {
        prop_assert!(dmt_curve(t).check_shape().is_ok());
        let md = max_diversity(t);
        prop_assert!(md.value <= md.upper_bound);
        prop_assert_eq!(md.bound_attained, is_rayleigh_equivalent(t));
    }

    #[test]
    fn interpolation_is_monotone_and_convex(t in triple(), a in 0u32..64, b in 0u32..64) {
        let c = dmt_curve(t);
        let m = c.max_gain() as i64;
        let at = |x: u32| {
            let r = Rational::new(BigInt::from(x as i64 * m), BigInt::from(64));
            dmt_at(&c, &r).unwrap()
        };
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(at(hi) <= at(lo));
        // midpoint convexity on the grid
        if (lo + hi) % 2 == 0 {
            let two = Rational::from_integer(BigInt::from(2));
            prop_assert!(at((lo + hi) / 2) * &two <= at(lo) + at(hi));
        }
    }

    #[test]
    fn lp_and_greedy_match_closed_form(
        (a, b, c) in (1u32..=4, 1u32..=4, 1u32..=4),
        num in 0i64..=48,
        den in 1i64..=12,
    ) {
        let t = ChannelTriple::new(a, b, c).unwrap();
        let curve = dmt_curve(t);
        let r = Rational::new(BigInt::from(num), BigInt::from(den));
        prop_assume!(r <= Rational::from_integer(BigInt::from(curve.max_gain())));
        let (m, n, l) = triple_dims(t);
        let cf = dmt_at(&curve, &r).unwrap();
        prop_assert_eq!(dmt_via_lp(m, n, l, &r).unwrap(), cf.clone());
        prop_assert_eq!(dmt_via_greedy(m, n, l, &r).unwrap(), cf);
    }
}
