use proptest::prelude::*;

use iet_lab::catalog;
use iet_lab::iet::Iet;
use iet_lab::induction::{angle, matrix_product, return_time_oracle, run_induction, Induction};
use iet_lab::ExactScalar;

const CAP: u64 = 10_000_000;

/// Rotation by the fractional part of `a/q + (b/r)√d`, `b ≠ 0`.
fn quadratic_rotation() -> impl Strategy<Value = Iet> {
    (-6i64..=6, 1i64..=6, prop_oneof![-4i64..=-1, 1i64..=4], 1i64..=6, proptest::sample::select(vec![2u64, 3, 5, 7]))
        .prop_map(|(a, q, b, r, d)| {
            let alpha = ExactScalar::quadratic(
                &ExactScalar::rational(a, q).unwrap(),
                &ExactScalar::rational(b, r).unwrap(),
                d,
            )
            .unwrap()
            .frac();
            Iet::rotation(&alpha).unwrap()
        })
}

fn keane() -> impl Strategy<Value = Iet> {
    prop_oneof![
        proptest::sample::select(vec!["golden", "three", "four"]).prop_map(|n| catalog::by_name(n).unwrap()),
        quadratic_rotation(),
    ]
}

fn induce(iet: &Iet, depth: usize) -> Induction {
    run_induction(iet, depth, CAP).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oracle_matches_column_sums(iet in keane()) {
        let ind = induce(&iet, 7);
        let b = ind.piece_count();
        for k in 0..ind.depth() {
            for l in k + 1..=(k + 5).min(ind.depth()) {
                let sums = matrix_product(&ind, k, l - k - 1).unwrap().column_sums();
                for (j, &sum) in sums.iter().enumerate().take(b) {
                    prop_assert_eq!(return_time_oracle(&iet, &ind, k, l, j, CAP).unwrap(), sum, "k={} l={} j={}", k, l, j);
                }
            }
        }
    }

    #[test]
    fn column_sums_compose_return_times(iet in keane()) {
        let ind = induce(&iet, 8);
        for (k, m) in ind.matrices.iter().enumerate() {
            prop_assert_eq!(&m.column_sums(), &ind.return_times[k]);
        }
        for l in 1..=ind.depth() {
            let product = matrix_product(&ind, 0, l - 1).unwrap();
            prop_assert_eq!(&product.column_sums(), &ind.stages[l].base_return_times);
        }
    }

    #[test]
    fn stages_nest(iet in keane()) {
        let ind = induce(&iet, 8);
        for w in ind.stages.windows(2) {
            let (cur, next) = (&w[0], &w[1]);
            prop_assert!(cur.starts[0].is_zero() && next.starts[0].is_zero());
            prop_assert_eq!(&next.length, &cur.lengths[0]);
            prop_assert!(cur.lengths[0] < cur.length);
            let total = cur.lengths.iter().fold(ExactScalar::zero(), |acc, l| &acc + l);
            prop_assert_eq!(total, cur.length.clone());
        }
    }

    #[test]
    fn column_angles_shrink_with_length(iet in keane()) {
        let ind = induce(&iet, 9);
        let b = ind.piece_count();
        for k in 0..3 {
            let mut prev = f64::INFINITY;
            for r in 0..ind.depth() - k {
                let m = matrix_product(&ind, k, r).unwrap();
                let mut widest: f64 = 0.0;
                for i in 0..b {
                    for j in i + 1..b {
                        widest = widest.max(angle(&m.column(i), &m.column(j)));
                    }
                }
                prop_assert!(widest <= prev, "k={} r={}: {} after {}", k, r, widest, prev);
                prev = widest;
            }
        }
    }
}

#[test]
fn angle_of_integer_columns() {
    assert_eq!(angle(&[1, 0], &[2, 0]), 0.0);
    assert!((angle(&[1, 0], &[0, 3]) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert!(angle(&[1_000_000_000, 1_000_000_001], &[1, 1]) > 0.0);
}
