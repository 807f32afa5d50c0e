//! Interval exchange transformations over exact scalars.
//!
//! An exchange of `b` intervals is given by a permutation `π` of `{1..b}` and
//! lengths `λ_1..λ_b` summing to one. Interval `i` is
//! `[λ_1+…+λ_{i-1}, λ_1+…+λ_i)` and is translated so that it lands in
//! position `π(i)`:
//!
//! ```text
//! T x = x − Σ_{j<i} λ_j + Σ_{π(j)<π(i)} λ_j      for x in interval i
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{ExactScalar, NumericError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IetError {
    #[error("permutation must be a bijection of 1..{0}")]
    InvalidPermutation(usize),
    #[error("permutation is reducible: it fixes the block 1..{0}")]
    Reducible(usize),
    #[error("expected {expected} lengths, got {got}")]
    LengthCount { expected: usize, got: usize },
    #[error("length {index} is not positive: {value}")]
    NonPositiveLength { index: usize, value: ExactScalar },
    #[error("lengths sum to {0}, not 1")]
    NonUnitTotal(ExactScalar),
    #[error("point {0} is outside [0, 1)")]
    OutOfRange(ExactScalar),
    #[error("infinite distinct orbits condition fails at n = {n}")]
    IdocFailure { n: u64 },
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// A permutation of `{1..b}`, stored zero-based.
///
/// `images[i]` is the position (zero-based) that interval `i` occupies after
/// the exchange.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    /// From the one-based image list `(π(1), …, π(b))`.
    pub fn from_one_based(images: &[usize]) -> Result<Self, IetError> {
        let b = images.len();
        let mut seen = vec![false; b];
        for &p in images {
            if p == 0 || p > b || seen[p - 1] {
                return Err(IetError::InvalidPermutation(b));
            }
            seen[p - 1] = true;
        }
        if b == 0 {
            return Err(IetError::InvalidPermutation(0));
        }
        Ok(Permutation {
            images: images.iter().map(|p| p - 1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Zero-based image of zero-based index `i`.
    pub fn image(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.images.iter().map(|p| p + 1).collect()
    }

    /// The smallest `k < b` with `π({1..k}) = {1..k}`, if any.
    pub fn fixed_block(&self) -> Option<usize> {
        let mut max_image = 0;
        for (k, &p) in self.images.iter().enumerate().take(self.len().saturating_sub(1)) {
            max_image = max_image.max(p);
            if max_image == k {
                return Some(k + 1);
            }
        }
        None
    }

    pub fn is_irreducible(&self) -> bool {
        self.fixed_block().is_none()
    }
}

/// A validated interval exchange transformation of `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iet {
    perm: Permutation,
    lengths: Vec<ExactScalar>,
    /// `β_0 = 0, β_1, …, β_{b−1}`.
    starts: Vec<ExactScalar>,
    offsets: Vec<ExactScalar>,
    /// Piece indices sorted by the left endpoint of their image.
    by_image: Vec<usize>,
    image_starts: Vec<ExactScalar>,
}

impl Iet {
    pub fn new(perm: Permutation, lengths: Vec<ExactScalar>) -> Result<Self, IetError> {
        let b = perm.len();
        if lengths.len() != b {
            return Err(IetError::LengthCount {
                expected: b,
                got: lengths.len(),
            });
        }
        if let Some(k) = perm.fixed_block() {
            return Err(IetError::Reducible(k));
        }
        let mut total = ExactScalar::zero();
        for (index, len) in lengths.iter().enumerate() {
            total = total.try_add(len)?;
            if len.signum().is_le() {
                return Err(IetError::NonPositiveLength {
                    index: index + 1,
                    value: len.clone(),
                });
            }
        }
        if total != ExactScalar::one() {
            return Err(IetError::NonUnitTotal(total));
        }

        let mut starts = Vec::with_capacity(b);
        let mut acc = ExactScalar::zero();
        for len in &lengths {
            starts.push(acc.clone());
            acc = &acc + len;
        }
        let mut by_image: Vec<usize> = (0..b).collect();
        by_image.sort_by_key(|&i| perm.image(i));
        let mut image_left = vec![ExactScalar::zero(); b];
        let mut acc = ExactScalar::zero();
        for &i in &by_image {
            image_left[i] = acc.clone();
            acc = &acc + &lengths[i];
        }
        let offsets = (0..b).map(|i| &image_left[i] - &starts[i]).collect();
        let image_starts = by_image.iter().map(|&i| image_left[i].clone()).collect();
        Ok(Iet {
            perm,
            lengths,
            starts,
            offsets,
            by_image,
            image_starts,
        })
    }

    /// Circle rotation `x ↦ x + α mod 1` as the exchange of
    /// `[0, 1−α)` and `[1−α, 1)`.
    pub fn rotation(alpha: &ExactScalar) -> Result<Self, IetError> {
        let perm = Permutation::from_one_based(&[2, 1])?;
        Iet::new(perm, vec![ExactScalar::one() - alpha, alpha.clone()])
    }

    /// Rotation by the inverse golden ratio `(√5 − 1)/2`.
    pub fn golden_rotation() -> Self {
        let alpha = crate::numeric::s("-1/2 + 1/2*sqrt(5)");
        Iet::rotation(&alpha).expect("valid rotation")
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn lengths(&self) -> &[ExactScalar] {
        &self.lengths
    }

    /// Number of exchanged intervals `b`.
    pub fn interval_count(&self) -> usize {
        self.lengths.len()
    }

    /// Left endpoints `β_0 = 0, …, β_{b−1}`.
    pub fn starts(&self) -> &[ExactScalar] {
        &self.starts
    }

    /// Interior discontinuities `D = {β_1, …, β_{b−1}}`.
    pub fn discontinuities(&self) -> &[ExactScalar] {
        &self.starts[1..]
    }

    /// Translation applied on each interval.
    pub fn offsets(&self) -> &[ExactScalar] {
        &self.offsets
    }

    /// Zero-based interval containing `x ∈ [0, 1)`.
    pub fn piece_of(&self, x: &ExactScalar) -> usize {
        self.starts.partition_point(|s| s <= x) - 1
    }

    fn check_range(x: &ExactScalar) -> Result<(), IetError> {
        if x.signum().is_lt() || *x >= ExactScalar::one() {
            return Err(IetError::OutOfRange(x.clone()));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &ExactScalar) -> Result<ExactScalar, IetError> {
        Self::check_range(x)?;
        Ok(self.apply(x))
    }

    /// `evaluate` without the range check; `x` must lie in `[0, 1)`.
    pub fn apply(&self, x: &ExactScalar) -> ExactScalar {
        x + &self.offsets[self.piece_of(x)]
    }

    pub fn evaluate_inverse(&self, y: &ExactScalar) -> Result<ExactScalar, IetError> {
        Self::check_range(y)?;
        Ok(self.apply_inverse(y))
    }

    pub fn apply_inverse(&self, y: &ExactScalar) -> ExactScalar {
        let slot = self.image_starts.partition_point(|s| s <= y) - 1;
        y - &self.offsets[self.by_image[slot]]
    }

    /// `(x, Tx, …, T^{n−1}x)`.
    pub fn orbit(&self, x: &ExactScalar, n: usize) -> Result<Vec<ExactScalar>, IetError> {
        Self::check_range(x)?;
        let mut out = Vec::with_capacity(n);
        let mut cur = x.clone();
        for _ in 0..n {
            let next = self.apply(&cur);
            out.push(std::mem::replace(&mut cur, next));
        }
        Ok(out)
    }

    /// Endpoints and extreme gaps of the partition cut by
    /// `D ∪ T^{-1}D ∪ … ∪ T^{-n}D` (together with 0).
    pub fn refined_partition(&self, n: u64) -> Result<RefinedPartition, IetError> {
        if n == 0 {
            return Err(IetError::ZeroDepth);
        }
        let mut refiner = PartitionRefiner::new(self);
        for _ in 0..n {
            refiner.refine();
        }
        Ok(refiner.snapshot())
    }

    /// Smallest `n ≤ n_max` with `T^n β_i ∈ D` for some `i`.
    pub fn check_idoc(&self, n_max: u64) -> Result<IdocOutcome, IetError> {
        if n_max == 0 {
            return Err(IetError::ZeroDepth);
        }
        let disc = self.discontinuities();
        let mut frontier: Vec<ExactScalar> = disc.to_vec();
        for n in 1..=n_max {
            for (from, p) in frontier.iter_mut().enumerate() {
                *p = self.apply(p);
                if let Ok(to) = disc.binary_search(p) {
                    return Ok(IdocOutcome::FailsAt { n, from, to });
                }
            }
        }
        Ok(IdocOutcome::PassedToDepth(n_max))
    }

    /// Finite-depth surrogates for the linear recurrence constants.
    pub fn recurrence_constants(&self, n_max: u64) -> Result<RecurrenceConstants, IetError> {
        if let IdocOutcome::FailsAt { n, .. } = self.check_idoc(n_max)? {
            return Err(IetError::IdocFailure { n });
        }
        let mut refiner = PartitionRefiner::new(self);
        let mut c3: Option<ExactScalar> = None;
        let mut c1: Option<ExactScalar> = None;
        for n in 1..=n_max {
            refiner.refine();
            let scale = ExactScalar::from_integer(n as i64);
            let lower = &scale * refiner.eta();
            let upper = &scale * refiner.kappa();
            if c3.as_ref().is_none_or(|c| lower < *c) {
                c3 = Some(lower);
            }
            if c1.as_ref().is_none_or(|c| upper > *c) {
                c1 = Some(upper);
            }
        }
        let c3 = c3.expect("n_max ≥ 1");
        let c1 = c1.expect("n_max ≥ 1");
        let delta = c3.halve_times(2);
        Ok(RecurrenceConstants {
            n_max,
            c3_est: c3.clone(),
            c2_est: c3,
            c1_est: c1,
            delta,
        })
    }
}

/// Result of a finite-depth check of the infinite distinct orbits condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum IdocOutcome {
    /// No connection found up to this depth; not a certificate.
    PassedToDepth(u64),
    /// `T^n β_from = β_to` (zero-based indices into `D`).
    FailsAt { n: u64, from: usize, to: usize },
}

impl IdocOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, IdocOutcome::PassedToDepth(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefinedPartition {
    pub depth: u64,
    /// Sorted cut points, starting at 0.
    pub points: Vec<ExactScalar>,
    /// Smallest gap.
    pub eta: ExactScalar,
    /// Largest gap.
    pub kappa: ExactScalar,
}

/// `c3_est = min n·η(n)`, `c1_est = max n·κ(n)` over `n ≤ n_max`;
/// `c2_est = c3_est` and `delta = c2_est/4`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrenceConstants {
    pub n_max: u64,
    pub c3_est: ExactScalar,
    pub c2_est: ExactScalar,
    pub c1_est: ExactScalar,
    pub delta: ExactScalar,
}

/// Incrementally refines the discontinuity partition one preimage level at
/// a time, keeping the multiset of gaps so extreme gaps are O(log n).
pub struct PartitionRefiner<'a> {
    iet: &'a Iet,
    depth: u64,
    frontier: Vec<ExactScalar>,
    points: BTreeSet<ExactScalar>,
    gaps: BTreeMap<ExactScalar, usize>,
}

impl<'a> PartitionRefiner<'a> {
    /// Level 0: the partition `{0} ∪ D`.
    pub fn new(iet: &'a Iet) -> Self {
        let mut r = PartitionRefiner {
            iet,
            depth: 0,
            frontier: iet.discontinuities().to_vec(),
            points: BTreeSet::new(),
            gaps: BTreeMap::new(),
        };
        r.points.insert(ExactScalar::zero());
        r.gaps.insert(ExactScalar::one(), 1);
        for p in iet.discontinuities().to_vec() {
            r.insert(p);
        }
        r
    }

    fn insert(&mut self, p: ExactScalar) {
        if self.points.contains(&p) {
            return;
        }
        let below = self.points.range(..&p).next_back().cloned().expect("0 is present");
        let above = self
            .points
            .range(&p..)
            .next()
            .cloned()
            .unwrap_or_else(ExactScalar::one);
        self.remove_gap(&above - &below);
        self.add_gap(&p - &below);
        self.add_gap(&above - &p);
        self.points.insert(p);
    }

    fn add_gap(&mut self, g: ExactScalar) {
        *self.gaps.entry(g).or_insert(0) += 1;
    }

    fn remove_gap(&mut self, g: ExactScalar) {
        let count = self.gaps.get_mut(&g).expect("gap present");
        *count -= 1;
        if *count == 0 {
            self.gaps.remove(&g);
        }
    }

    /// Add the next preimage level `T^{-(depth+1)} D`.
    pub fn refine(&mut self) {
        let next: Vec<ExactScalar> = self
            .frontier
            .iter()
            .map(|p| self.iet.apply_inverse(p))
            .collect();
        for p in &next {
            self.insert(p.clone());
        }
        self.frontier = next;
        self.depth += 1;
    }

    pub fn depth(&self) -> u64 {
        self.depth
    }

    pub fn eta(&self) -> &ExactScalar {
        self.gaps.keys().next().expect("nonempty")
    }

    pub fn kappa(&self) -> &ExactScalar {
        self.gaps.keys().next_back().expect("nonempty")
    }

    pub fn snapshot(&self) -> RefinedPartition {
        RefinedPartition {
            depth: self.depth,
            points: self.points.iter().cloned().collect(),
            eta: self.eta().clone(),
            kappa: self.kappa().clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::s;

    fn iet(perm: &[usize], lengths: &[&str]) -> Iet {
        Iet::new(
            Permutation::from_one_based(perm).unwrap(),
            lengths.iter().map(|l| s(l)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn build_errors() {
        let p12 = Permutation::from_one_based(&[1, 2]).unwrap();
        assert_eq!(
            Iet::new(p12, vec![s("1/2"), s("1/2")]),
            Err(IetError::Reducible(1))
        );
        let p21 = Permutation::from_one_based(&[2, 1]).unwrap();
        assert!(matches!(
            Iet::new(p21.clone(), vec![s("1/2"), s("1/3")]),
            Err(IetError::NonUnitTotal(_))
        ));
        assert!(matches!(
            Iet::new(p21.clone(), vec![s("3/2"), s("-1/2")]),
            Err(IetError::NonPositiveLength { index: 2, .. })
        ));
        assert!(Permutation::from_one_based(&[1, 1]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
        assert!(matches!(
            Iet::new(p21, vec![s("sqrt(2)"), s("1 - sqrt(3)")]),
            Err(IetError::Numeric(NumericError::IncompatibleBases(2, 3)))
        ));
    }

    #[test]
    fn reducibility_detects_inner_blocks() {
        let p = Permutation::from_one_based(&[2, 1, 3]).unwrap();
        assert_eq!(p.fixed_block(), Some(2));
        let p = Permutation::from_one_based(&[3, 2, 1]).unwrap();
        assert!(p.is_irreducible());
    }

    #[test]
    fn rotation_examples() {
        let t = iet(&[2, 1], &["2/3", "1/3"]);
        assert_eq!(t.evaluate(&s("0")).unwrap(), s("1/3"));
        assert_eq!(t.evaluate(&s("2/3")).unwrap(), s("0"));
        assert_eq!(t.evaluate_inverse(&s("0")).unwrap(), s("2/3"));
        assert_eq!(t.orbit(&s("0"), 3).unwrap(), vec![s("0"), s("1/3"), s("2/3")]);
        assert_eq!(t.orbit(&s("1/5"), 1).unwrap(), vec![s("1/5")]);
        assert!(matches!(t.evaluate(&s("1")), Err(IetError::OutOfRange(_))));
        assert!(matches!(t.evaluate(&s("-1/9")), Err(IetError::OutOfRange(_))));
    }

    #[test]
    fn three_interval_example() {
        let t = iet(&[3, 2, 1], &["1/2", "1/4", "1/4"]);
        assert_eq!(t.evaluate(&s("1/2")).unwrap(), s("1/4"));
        assert_eq!(t.evaluate_inverse(&s("1/4")).unwrap(), s("1/2"));
        assert_eq!(t.evaluate(&s("0")).unwrap(), s("1/2"));
        assert_eq!(t.evaluate(&s("3/4")).unwrap(), s("0"));
    }

    #[test]
    fn golden_orbit() {
        let t = Iet::golden_rotation();
        let orbit = t.orbit(&s("0"), 4).unwrap();
        assert_eq!(
            orbit,
            vec![
                s("0"),
                s("-1/2 + 1/2*sqrt(5)"),
                s("-2 + sqrt(5)"),
                s("-5/2 + 3/2*sqrt(5)")
            ]
        );
    }

    #[test]
    fn partition_examples() {
        let golden = Iet::golden_rotation();
        let p = golden.refined_partition(1).unwrap();
        assert_eq!(p.points, vec![s("0"), s("3/2 - 1/2*sqrt(5)"), s("3 - sqrt(5)")]);
        assert_eq!(p.eta, s("sqrt(5) - 2"));
        assert_eq!(p.kappa, s("3/2 - 1/2*sqrt(5)"));

        let third = iet(&[2, 1], &["2/3", "1/3"]);
        let p = third.refined_partition(1).unwrap();
        assert_eq!(p.points, vec![s("0"), s("1/3"), s("2/3")]);
        assert_eq!(p.eta, s("1/3"));
        assert_eq!(p.kappa, s("1/3"));
        assert_eq!(third.refined_partition(0), Err(IetError::ZeroDepth));
    }

    #[test]
    fn idoc_examples() {
        let quarter = iet(&[2, 1], &["3/4", "1/4"]);
        assert_eq!(
            quarter.check_idoc(10).unwrap(),
            IdocOutcome::FailsAt { n: 4, from: 0, to: 0 }
        );
        let third = iet(&[2, 1], &["2/3", "1/3"]);
        assert_eq!(third.check_idoc(2).unwrap(), IdocOutcome::PassedToDepth(2));
        assert!(matches!(
            third.check_idoc(10).unwrap(),
            IdocOutcome::FailsAt { n: 3, .. }
        ));
        assert_eq!(
            quarter.recurrence_constants(10),
            Err(IetError::IdocFailure { n: 4 })
        );
    }

    #[test]
    fn golden_constants_positive() {
        let c = Iet::golden_rotation().recurrence_constants(100).unwrap();
        assert!(c.c3_est.signum().is_gt());
        assert!(c.c2_est <= c.c1_est);
        assert_eq!(&c.delta * &s("4"), c.c2_est);
    }
}
