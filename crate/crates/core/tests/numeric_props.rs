use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

use iet_lab::ExactScalar;

const BASES: [u64; 8] = [2, 3, 5, 6, 7, 10, 11, 13];

fn rat(n: i64, d: i64) -> ExactScalar {
    ExactScalar::rational(n, d).unwrap()
}

fn quad(a: (i64, i64), b: (i64, i64), d: u64) -> ExactScalar {
    ExactScalar::quadratic(&rat(a.0, a.1), &rat(b.0, b.1), d).unwrap()
}

fn fraction() -> impl Strategy<Value = (i64, i64)> {
    (-1_000_000i64..=1_000_000, 1i64..=1_000_000)
}

/// Sign of `a + b√d` from a 256-bit enclosure of `√d`, or `None` when the
/// enclosure straddles zero.
fn interval_sign(a: (i64, i64), b: (i64, i64), d: u64) -> Option<Ordering> {
    let bits = 256u32;
    let scaled = BigInt::from(d) << (2 * bits);
    let lo = scaled.sqrt();
    let hi = &lo + 1u32;
    // a + b√d has the sign of a·q_b·2^bits + p_b·q_a·s for s ∈ [lo, hi]
    let base = (BigInt::from(a.0) * BigInt::from(b.1)) << bits;
    let coeff = BigInt::from(b.0) * BigInt::from(a.1);
    let (e1, e2) = (&base + &coeff * &lo, &base + &coeff * &hi);
    let s1 = e1.sign();
    if e1.is_zero() || e2.is_zero() || s1 != e2.sign() {
        return None;
    }
    Some(if e1.is_positive() { Ordering::Greater } else { Ordering::Less })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn rational_order_matches_cross_multiplication(
        a in (-1_000_000_000_000i64..=1_000_000_000_000, 1i64..=1_000_000_000_000),
        b in (-1_000_000_000_000i64..=1_000_000_000_000, 1i64..=1_000_000_000_000),
    ) {
        let want = (a.0 as i128 * b.1 as i128).cmp(&(b.0 as i128 * a.1 as i128));
        prop_assert_eq!(rat(a.0, a.1).cmp(&rat(b.0, b.1)), want);
    }

    #[test]
    fn quadratic_sign_matches_interval_evaluation(
        a in fraction(),
        b in fraction(),
        d in proptest::sample::select(BASES.to_vec()),
    ) {
        if let Some(want) = interval_sign(a, b, d) {
            prop_assert_eq!(quad(a, b, d).signum(), want);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn field_axioms(
        parts in proptest::collection::vec((fraction(), fraction()), 3),
        d in proptest::sample::select(BASES.to_vec()),
    ) {
        let v: Vec<ExactScalar> = parts.iter().map(|&(a, b)| quad(a, b, d)).collect();
        let (x, y, z) = (&v[0], &v[1], &v[2]);
        prop_assert_eq!(&(x + y) + z, x + &(y + z));
        prop_assert_eq!(&(x * y) * z, x * &(y * z));
        prop_assert_eq!(x * &(y + z), &(x * y) + &(x * z));
        prop_assert_eq!(x + y, y + x);
        prop_assert!((x - x).is_zero());
        if !x.is_zero() {
            prop_assert_eq!(&(y / x) * x, y.clone());
            prop_assert_eq!(x / x, ExactScalar::one());
        }
    }

    #[test]
    fn floor_and_frac_split(a in fraction(), b in fraction(), d in proptest::sample::select(BASES.to_vec())) {
        for x in [rat(a.0, a.1), quad(a, b, d)] {
            let f = x.frac();
            prop_assert!(f.signum().is_ge());
            prop_assert!(f < ExactScalar::one());
            prop_assert_eq!(&f + &ExactScalar::from_bigint(x.floor()), x);
        }
    }

    #[test]
    fn text_round_trip(a in fraction(), b in fraction(), d in proptest::sample::select(BASES.to_vec())) {
        let x = quad(a, b, d);
        prop_assert_eq!(x.to_string().parse::<ExactScalar>().unwrap(), x);
    }
}

#[test]
fn mixed_bases_are_refused() {
    let r2 = quad((0, 1), (1, 1), 2);
    let r3 = quad((0, 1), (1, 1), 3);
    assert!(r2.try_add(&r3).is_err());
    assert!(r2.try_cmp(&r3).is_err());
    assert!("0.5".parse::<ExactScalar>().is_err());
}
