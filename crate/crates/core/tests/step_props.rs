use proptest::prelude::*;

use iet_lab::step::{sample_step, BoundedFamily, SampleOptions, StepError, StepFunction};
use iet_lab::ExactScalar;

fn int(n: i64) -> ExactScalar {
    ExactScalar::from_integer(n)
}

fn family(d: usize) -> BoundedFamily {
    BoundedFamily::new(d, int(1)).unwrap()
}

fn sampled(d: usize, seed: u64) -> StepFunction {
    let options = SampleOptions { bits: 12, ..SampleOptions::default() };
    sample_step(&family(d), seed, &options).unwrap()
}

fn weighted_sum(f: &StepFunction) -> ExactScalar {
    f.widths().iter().zip(f.values()).fold(ExactScalar::zero(), |acc, (x, y)| &acc + &(x * y))
}

/// `ξ·(m − 2^19)/2^scale`: `|ζ| < ξ/2` for scale 20, `|ζ| ≤ ξ/4` for 21.
fn zeta(f: &StepFunction, m: i64, scale: u32) -> ExactScalar {
    f.xi() * &ExactScalar::rational(m - (1 << 19), 1 << scale).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn nudge_keeps_mean_zero_and_moves_one_location(
        d in 1usize..=4,
        seed in any::<u64>(),
        i in 0usize..4,
        m in 1i64..(1 << 20),
    ) {
        let f = sampled(d, seed);
        let i = i % d;
        let z = zeta(&f, m, 20);
        let g = match f.nudge(i, &z) {
            Ok(g) => g,
            Err(StepError::EqualAdjacentValues { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(g.mean().is_zero());
        prop_assert!(weighted_sum(&g).is_zero());
        for (j, (a, b)) in f.locations().iter().zip(g.locations()).enumerate() {
            if j == i {
                prop_assert_eq!(b - a, z.clone());
            } else {
                prop_assert_eq!(a, b);
            }
        }
        for (j, (a, b)) in f.values().iter().zip(g.values()).enumerate() {
            if j != i + 1 {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn nudge_distance_within_bound(
        d in 1usize..=4,
        seed in any::<u64>(),
        i in 0usize..4,
        m in 0i64..=(1 << 20),
    ) {
        let f = sampled(d, seed);
        let i = i % d;
        let z = zeta(&f, m, 21);
        prop_assert!(&z.abs() * &int(4) <= *f.xi());
        let g = match f.nudge(i, &z) {
            Ok(g) => g,
            Err(StepError::EqualAdjacentValues { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let big_d = int(1);
        let value_term = &(&(&z.abs() * &int(8)) * &big_d) / &(f.xi() * &int(3));
        let bound = z.abs().max_of(&value_term).clone();
        prop_assert!(f.distance(&g).unwrap() <= bound);
    }

    #[test]
    fn oversized_zeta_rejected(d in 1usize..=4, seed in any::<u64>()) {
        let f = sampled(d, seed);
        let half = f.xi() * &ExactScalar::rational(1, 2).unwrap();
        let rejected = matches!(f.nudge(0, &half), Err(StepError::ZetaTooLarge { .. }));
        prop_assert!(rejected);
        let rejected = matches!(f.nudge(0, &-&half), Err(StepError::ZetaTooLarge { .. }));
        prop_assert!(rejected);
    }

    #[test]
    fn distance_is_a_metric(d in 1usize..=3, s in any::<(u64, u64, u64)>()) {
        let (f, g, h) = (sampled(d, s.0), sampled(d, s.1), sampled(d, s.2));
        prop_assert!(f.distance(&f).unwrap().is_zero());
        prop_assert_eq!(f.distance(&g).unwrap(), g.distance(&f).unwrap());
        prop_assert!(f.distance(&h).unwrap() <= &f.distance(&g).unwrap() + &g.distance(&h).unwrap());
        if f.distance(&g).unwrap().is_zero() {
            prop_assert_eq!(&f, &g);
        }
    }

    #[test]
    fn samples_respect_family(d in 1usize..=5, seed in any::<u64>()) {
        let f = sampled(d, seed);
        prop_assert_eq!(f.discontinuity_count(), d);
        prop_assert!(family(d).contains(&f));
        prop_assert!(weighted_sum(&f).is_zero());
        prop_assert_eq!(&f, &sampled(d, seed));
    }
}

#[test]
fn distance_needs_matching_dimension() {
    assert!(matches!(
        sampled(1, 0).distance(&sampled(2, 0)),
        Err(StepError::DimensionMismatch(1, 2))
    ));
}
