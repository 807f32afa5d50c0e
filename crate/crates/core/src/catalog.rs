//! Named exchanges used by the CLI presets, experiments and tests.

use crate::iet::{Iet, Permutation};
use crate::numeric::s;

/// Rotation by `(√5 − 1)/2`.
pub fn golden() -> Iet {
    Iet::golden_rotation()
}

/// Rotation by `1/3`; periodic, so every orbit closes up.
pub fn third() -> Iet {
    Iet::rotation(&s("1/3")).expect("valid")
}

/// `(3 2 1)` with lengths `(1/5, (√5 − 1)/4, 21/20 − √5/4)`.
pub fn three_interval() -> Iet {
    build(&[3, 2, 1], &["1/5", "-1/4 + 1/4*sqrt(5)", "21/20 - 1/4*sqrt(5)"])
}

/// `(2 4 1 3)` with lengths in `ℚ(√2)`.
pub fn four_interval() -> Iet {
    build(
        &[2, 4, 1, 3],
        &["1/5", "-1/2 + 1/2*sqrt(2)", "1/4", "21/20 - 1/2*sqrt(2)"],
    )
}

pub fn by_name(name: &str) -> Option<Iet> {
    match name {
        "golden" => Some(golden()),
        "third" => Some(third()),
        "three" => Some(three_interval()),
        "four" => Some(four_interval()),
        _ => None,
    }
}

pub const NAMES: [&str; 4] = ["golden", "third", "three", "four"];

fn build(perm: &[usize], lengths: &[&str]) -> Iet {
    Iet::new(
        Permutation::from_one_based(perm).expect("valid"),
        lengths.iter().map(|l| s(l)).collect(),
    )
    .expect("valid")
}
