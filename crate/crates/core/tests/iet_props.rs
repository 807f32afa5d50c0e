use proptest::prelude::*;

use iet_lab::catalog;
use iet_lab::iet::{Iet, PartitionRefiner, Permutation};
use iet_lab::ExactScalar;

fn dyadic(m: u64, bits: u32) -> ExactScalar {
    ExactScalar::rational(m as i64, 1i64 << bits).unwrap()
}

/// Irreducible permutation with positive rational lengths.
fn rational_iet() -> impl Strategy<Value = Iet> {
    (2usize..=5)
        .prop_flat_map(|b| {
            (
                Just((1..=b).collect::<Vec<usize>>()).prop_shuffle(),
                proptest::collection::vec(1i64..=50, b),
            )
        })
        .prop_filter_map("reducible", |(perm, weights)| {
            let perm = Permutation::from_one_based(&perm).ok()?;
            if !perm.is_irreducible() {
                return None;
            }
            let total: i64 = weights.iter().sum();
            let lengths = weights.iter().map(|&w| ExactScalar::rational(w, total).unwrap()).collect();
            Iet::new(perm, lengths).ok()
        })
}

fn keane() -> impl Strategy<Value = Iet> {
    proptest::sample::select(vec!["golden", "three", "four"]).prop_map(|n| catalog::by_name(n).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn inverse_undoes_forward(iet in prop_oneof![rational_iet(), keane()], m in 0u64..(1 << 40)) {
        let x = dyadic(m, 40);
        let y = iet.evaluate(&x).unwrap();
        prop_assert_eq!(iet.evaluate_inverse(&y).unwrap(), x.clone());
        prop_assert_eq!(iet.apply(&iet.apply_inverse(&x)), x);
    }

    #[test]
    fn images_tile_the_unit_interval(iet in prop_oneof![rational_iet(), keane()]) {
        let mut images: Vec<(ExactScalar, ExactScalar)> = iet
            .starts()
            .iter()
            .zip(iet.offsets())
            .zip(iet.lengths())
            .map(|((a, o), l)| (a + o, a + o + l))
            .collect();
        images.sort();
        prop_assert!(images[0].0.is_zero());
        for w in images.windows(2) {
            prop_assert_eq!(&w[0].1, &w[1].0);
        }
        prop_assert_eq!(&images.last().unwrap().1, &ExactScalar::one());
        let total = iet.lengths().iter().fold(ExactScalar::zero(), |acc, l| &acc + l);
        prop_assert_eq!(total, ExactScalar::one());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_gaps_never_grow(iet in prop_oneof![rational_iet(), keane()]) {
        let mut r = PartitionRefiner::new(&iet);
        let (mut eta, mut kappa) = (r.eta().clone(), r.kappa().clone());
        for _ in 0..150 {
            r.refine();
            prop_assert!(r.eta() <= &eta);
            prop_assert!(r.kappa() <= &kappa);
            eta = r.eta().clone();
            kappa = r.kappa().clone();
        }
    }

    #[test]
    fn orbit_points_are_eta_separated(iet in keane(), m in 0u64..(1 << 40), n in 1u64..=300) {
        let x = dyadic(m, 40);
        let eta = iet.refined_partition(n).unwrap().eta;
        let mut orbit = iet.orbit(&x, n as usize).unwrap();
        orbit.truncate(n as usize);
        orbit.sort();
        for w in orbit.windows(2) {
            prop_assert!(&w[1] - &w[0] >= eta, "gap {} below eta {} at n = {}", &w[1] - &w[0], eta, n);
        }
    }
}

#[test]
fn rotation_connections() {
    let quarter = Iet::rotation(&ExactScalar::rational(1, 4).unwrap()).unwrap();
    assert_eq!(quarter.check_idoc(100).unwrap(), iet_lab::iet::IdocOutcome::FailsAt { n: 4, from: 0, to: 0 });
    assert!(catalog::golden().check_idoc(2_000).unwrap().passed());
}
