//! Mean-zero step functions on `[0, 1)`.
//!
//! A function with `d` discontinuities is stored by its coordinates
//! `(x_1, …, x_{d+1}, y_1, …, y_{d+1})`: it takes the value `y_i` on the
//! `i`-th piece, which has width `x_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{ExactScalar, NumericError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("need at least two pieces, got {0}")]
    TooFewPieces(usize),
    #[error("{widths} widths but {values} values")]
    ShapeMismatch { widths: usize, values: usize },
    #[error("width {index} is not positive: {value}")]
    NonPositiveWidth { index: usize, value: ExactScalar },
    #[error("widths sum to {0}, not 1")]
    NonUnitTotal(ExactScalar),
    #[error("mean is {0}, not 0")]
    NonZeroMean(ExactScalar),
    #[error("pieces {index} and {} share the value {value}", index + 1)]
    EqualAdjacentValues { index: usize, value: ExactScalar },
    #[error("point {0} is outside [0, 1)")]
    OutOfRange(ExactScalar),
    #[error("functions have {0} and {1} discontinuities")]
    DimensionMismatch(usize, usize),
    #[error("discontinuity index {index} out of range 1..={d}")]
    BadIndex { index: usize, d: usize },
    #[error("|zeta| = {zeta} is not below half the minimum width {xi}")]
    ZetaTooLarge { zeta: ExactScalar, xi: ExactScalar },
    #[error("family needs d >= 1 and a positive bound")]
    InvalidFamily,
    #[error("no admissible sample after {0} attempts")]
    RejectionCapExceeded(usize),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct StepFunction {
    widths: Vec<ExactScalar>,
    values: Vec<ExactScalar>,
    #[serde(skip)]
    locations: Vec<ExactScalar>,
}

impl StepFunction {
    pub fn new(widths: Vec<ExactScalar>, values: Vec<ExactScalar>) -> Result<Self, StepError> {
        if widths.len() != values.len() {
            return Err(StepError::ShapeMismatch {
                widths: widths.len(),
                values: values.len(),
            });
        }
        if widths.len() < 2 {
            return Err(StepError::TooFewPieces(widths.len()));
        }
        let mut total = ExactScalar::zero();
        let mut mean = ExactScalar::zero();
        for (index, (x, y)) in widths.iter().zip(&values).enumerate() {
            if x.signum().is_le() {
                return Err(StepError::NonPositiveWidth {
                    index: index + 1,
                    value: x.clone(),
                });
            }
            total = total.try_add(x)?;
            mean = mean.try_add(&x.try_mul(y)?)?;
        }
        if total != ExactScalar::one() {
            return Err(StepError::NonUnitTotal(total));
        }
        if !mean.is_zero() {
            return Err(StepError::NonZeroMean(mean));
        }
        for (index, pair) in values.windows(2).enumerate() {
            if pair[0] == pair[1] {
                return Err(StepError::EqualAdjacentValues {
                    index: index + 1,
                    value: pair[0].clone(),
                });
            }
        }
        Ok(Self::assemble(widths, values))
    }

    /// Skips the mean and adjacency checks. Only for drift controls built
    /// on purpose with nonzero mean.
    #[doc(hidden)]
    pub fn new_unchecked(widths: Vec<ExactScalar>, values: Vec<ExactScalar>) -> Self {
        Self::assemble(widths, values)
    }

    fn assemble(widths: Vec<ExactScalar>, values: Vec<ExactScalar>) -> Self {
        let mut locations = Vec::with_capacity(widths.len() - 1);
        let mut acc = ExactScalar::zero();
        for x in &widths[..widths.len() - 1] {
            acc = &acc + x;
            locations.push(acc.clone());
        }
        StepFunction {
            widths,
            values,
            locations,
        }
    }

    pub fn widths(&self) -> &[ExactScalar] {
        &self.widths
    }

    pub fn values(&self) -> &[ExactScalar] {
        &self.values
    }

    /// Number of discontinuities `d`.
    pub fn discontinuity_count(&self) -> usize {
        self.locations.len()
    }

    /// `a_i = x_1 + … + x_i` for `1 ≤ i ≤ d`.
    pub fn locations(&self) -> &[ExactScalar] {
        &self.locations
    }

    /// Smallest width `ξ`.
    pub fn xi(&self) -> &ExactScalar {
        self.widths.iter().min().expect("nonempty")
    }

    /// Largest `|y_i|`.
    pub fn sup_norm(&self) -> ExactScalar {
        self.values.iter().map(ExactScalar::abs).max().expect("nonempty")
    }

    pub fn mean(&self) -> ExactScalar {
        self.widths
            .iter()
            .zip(&self.values)
            .fold(ExactScalar::zero(), |acc, (x, y)| acc + x * y)
    }

    pub fn eval(&self, x: &ExactScalar) -> Result<ExactScalar, StepError> {
        if x.signum().is_lt() || *x >= ExactScalar::one() {
            return Err(StepError::OutOfRange(x.clone()));
        }
        Ok(self.value_at(x).clone())
    }

    /// `eval` without the range check.
    pub fn value_at(&self, x: &ExactScalar) -> &ExactScalar {
        &self.values[self.locations.partition_point(|a| a <= x)]
    }

    /// `(a_i, y_{i+1} − y_i)` for each discontinuity.
    pub fn jumps(&self) -> Vec<(ExactScalar, ExactScalar)> {
        self.locations
            .iter()
            .zip(self.values.windows(2))
            .map(|(a, pair)| (a.clone(), &pair[1] - &pair[0]))
            .collect()
    }

    /// ℓ∞ distance between coordinate vectors.
    pub fn distance(&self, other: &StepFunction) -> Result<ExactScalar, StepError> {
        if self.widths.len() != other.widths.len() {
            return Err(StepError::DimensionMismatch(
                self.discontinuity_count(),
                other.discontinuity_count(),
            ));
        }
        let mut best = ExactScalar::zero();
        let pairs = self
            .widths
            .iter()
            .zip(&other.widths)
            .chain(self.values.iter().zip(&other.values));
        for (a, b) in pairs {
            let diff = a.try_sub(b)?.abs();
            if diff > best {
                best = diff;
            }
        }
        Ok(best)
    }

    /// Moves discontinuity `i` (zero-based) by `zeta`, rescaling the value
    /// to its right so the mean stays zero.
    pub fn nudge(&self, i: usize, zeta: &ExactScalar) -> Result<StepFunction, StepError> {
        let d = self.discontinuity_count();
        if i >= d {
            return Err(StepError::BadIndex { index: i + 1, d });
        }
        let xi = self.xi().clone();
        if zeta.abs().try_mul(&ExactScalar::from_integer(2))? >= xi {
            return Err(StepError::ZetaTooLarge {
                zeta: zeta.clone(),
                xi,
            });
        }
        if zeta.is_zero() {
            return Ok(self.clone());
        }
        let mut widths = self.widths.clone();
        let mut values = self.values.clone();
        widths[i] = widths[i].try_add(zeta)?;
        widths[i + 1] = widths[i + 1].try_sub(zeta)?;
        let mass = self.values[i + 1]
            .try_mul(&self.widths[i + 1])?
            .try_sub(&zeta.try_mul(&self.values[i])?)?;
        values[i + 1] = mass.try_div(&widths[i + 1])?;
        StepFunction::new(widths, values)
    }
}

/// The family of step functions with `d` discontinuities and `|y_i| ≤ D`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundedFamily {
    pub d: usize,
    pub bound: ExactScalar,
}

impl BoundedFamily {
    pub fn new(d: usize, bound: ExactScalar) -> Result<Self, StepError> {
        if d == 0 || bound.signum().is_le() {
            return Err(StepError::InvalidFamily);
        }
        Ok(BoundedFamily { d, bound })
    }

    pub fn contains(&self, f: &StepFunction) -> bool {
        f.discontinuity_count() == self.d && f.sup_norm() <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOptions {
    /// Coordinates are multiples of `2^-bits`.
    pub bits: u32,
    /// Minimum `|y_{i+1} − y_i|` accepted.
    pub jump_floor: ExactScalar,
    pub max_attempts: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            bits: 16,
            jump_floor: ExactScalar::zero(),
            max_attempts: 1000,
        }
    }
}

/// Draws a function of `family` with dyadic widths and values shifted to
/// mean zero. The same seed always yields the same function.
pub fn sample_step(
    family: &BoundedFamily,
    seed: u64,
    options: &SampleOptions,
) -> Result<StepFunction, StepError> {
    if family.d == 0 || family.bound.signum().is_le() || options.bits == 0 || options.bits > 62 {
        return Err(StepError::InvalidFamily);
    }
    let denom = 1i64 << options.bits;
    if (denom as u64) <= family.d as u64 {
        return Err(StepError::InvalidFamily);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..options.max_attempts {
        if let Some(f) = draw(family, options, denom, &mut rng)? {
            return Ok(f);
        }
    }
    Err(StepError::RejectionCapExceeded(options.max_attempts))
}

fn draw(
    family: &BoundedFamily,
    options: &SampleOptions,
    denom: i64,
    rng: &mut ChaCha8Rng,
) -> Result<Option<StepFunction>, StepError> {
    let mut cuts: Vec<i64> = Vec::with_capacity(family.d + 2);
    while cuts.len() < family.d {
        let c = rng.gen_range(1..denom);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    cuts.insert(0, 0);
    cuts.push(denom);
    let widths: Vec<ExactScalar> = cuts
        .windows(2)
        .map(|w| ExactScalar::rational(w[1] - w[0], denom))
        .collect::<Result<_, _>>()?;
    let raw: Vec<ExactScalar> = (0..=family.d)
        .map(|_| {
            let j = rng.gen_range(0..=2 * denom);
            ExactScalar::rational(j - denom, denom).and_then(|u| u.try_mul(&family.bound))
        })
        .collect::<Result<_, _>>()?;
    let mut mean = ExactScalar::zero();
    for (x, u) in widths.iter().zip(&raw) {
        mean = mean.try_add(&x.try_mul(u)?)?;
    }
    let mut values = Vec::with_capacity(raw.len());
    for u in &raw {
        let y = u.try_sub(&mean)?;
        if y.abs() > family.bound {
            return Ok(None);
        }
        values.push(y);
    }
    if values.windows(2).any(|p| {
        let jump = (&p[1] - &p[0]).abs();
        jump.is_zero() || jump < options.jump_floor
    }) {
        return Ok(None);
    }
    Ok(Some(StepFunction::new(widths, values)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::s;

    fn step(widths: &[&str], values: &[&str]) -> Result<StepFunction, StepError> {
        StepFunction::new(
            widths.iter().map(|w| s(w)).collect(),
            values.iter().map(|v| s(v)).collect(),
        )
    }

    #[test]
    fn construction() {
        assert!(step(&["1/2", "1/2"], &["1", "-1"]).is_ok());
        assert!(step(&["3/5", "2/5"], &["1", "-3/2"]).is_ok());
        assert!(matches!(
            step(&["1/2", "1/2"], &["1", "1"]),
            Err(StepError::NonZeroMean(_))
        ));
        assert!(matches!(
            step(&["1/2", "1/2"], &["0", "0"]),
            Err(StepError::EqualAdjacentValues { index: 1, .. })
        ));
        assert!(matches!(
            step(&["1/2", "1/3"], &["1", "-1"]),
            Err(StepError::NonUnitTotal(_))
        ));
        assert!(matches!(
            step(&["3/2", "-1/2"], &["1", "3"]),
            Err(StepError::NonPositiveWidth { index: 2, .. })
        ));
        assert!(matches!(
            step(&["1"], &["0"]),
            Err(StepError::TooFewPieces(1))
        ));
    }

    #[test]
    fn evaluation_is_half_open() {
        let f = step(&["1/2", "1/2"], &["1", "-1"]).unwrap();
        assert_eq!(f.eval(&s("1/4")).unwrap(), s("1"));
        assert_eq!(f.eval(&s("1/2")).unwrap(), s("-1"));
        assert!(f.eval(&s("1")).is_err());
        let g = step(&["3/5", "2/5"], &["1", "-3/2"]).unwrap();
        assert_eq!(g.eval(&s("3/5")).unwrap(), s("-3/2"));
    }

    #[test]
    fn jump_lists() {
        let f = step(&["1/2", "1/2"], &["1", "-1"]).unwrap();
        assert_eq!(f.jumps(), vec![(s("1/2"), s("-2"))]);
        let g = step(&["1/3", "1/3", "1/3"], &["1", "0", "-1"]).unwrap();
        assert_eq!(g.jumps(), vec![(s("1/3"), s("-1")), (s("2/3"), s("-1"))]);
        let h = step(&["3/5", "2/5"], &["1", "-3/2"]).unwrap();
        assert_eq!(h.jumps(), vec![(s("3/5"), s("-5/2"))]);
    }

    #[test]
    fn distances() {
        let f = step(&["1/2", "1/2"], &["1", "-1"]).unwrap();
        let g = step(&["2/5", "3/5"], &["3/4", "-1/2"]).unwrap();
        assert_eq!(f.distance(&f).unwrap(), s("0"));
        assert_eq!(f.distance(&g).unwrap(), s("1/2"));
        assert_eq!(g.distance(&f).unwrap(), s("1/2"));
        let h = step(&["1/3", "1/3", "1/3"], &["1", "0", "-1"]).unwrap();
        assert!(matches!(f.distance(&h), Err(StepError::DimensionMismatch(1, 2))));
    }

    #[test]
    fn nudge_examples() {
        let f = step(&["1/2", "1/2"], &["1", "-1"]).unwrap();
        let g = f.nudge(0, &s("1/10")).unwrap();
        assert_eq!(g.widths(), &[s("3/5"), s("2/5")]);
        assert_eq!(g.values(), &[s("1"), s("-3/2")]);
        assert_eq!(f.nudge(0, &s("0")).unwrap(), f);
        assert!(matches!(
            f.nudge(0, &s("1/4")),
            Err(StepError::ZetaTooLarge { .. })
        ));
        assert!(matches!(f.nudge(1, &s("1/10")), Err(StepError::BadIndex { .. })));
    }

    #[test]
    fn nudge_value_bound_needs_quarter_width() {
        // Within |ζ| ≤ ξ/4 the excursion is at most 8|ζ|D/(3ξ).
        let f = step(&["1/2", "1/2"], &["1", "-1"]).unwrap();
        let bound_at = |z: &ExactScalar| {
            let lin = z.abs() * s("8") * f.sup_norm() / (s("3") * f.xi());
            lin.max_of(&z.abs()).clone()
        };
        let z = s("1/8");
        assert!(f.distance(&f.nudge(0, &z).unwrap()).unwrap() <= bound_at(&z));
        // Close to ξ/2 the denominator x_{i+1} − ζ falls below 3ξ/4 and the
        // stated bound no longer holds.
        let z = s("6/25");
        let moved = f.distance(&f.nudge(0, &z).unwrap()).unwrap();
        assert_eq!(moved, s("24/13"));
        assert!(moved > bound_at(&z));
    }

    #[test]
    fn sampler_is_deterministic_and_valid() {
        let fam = BoundedFamily::new(1, s("2")).unwrap();
        let opts = SampleOptions::default();
        let a = sample_step(&fam, 7, &opts).unwrap();
        let b = sample_step(&fam, 7, &opts).unwrap();
        assert_eq!(a, b);
        assert!(fam.contains(&a));
        assert!(a.mean().is_zero());
        let mut seen = std::collections::HashSet::new();
        for seed in 0..100 {
            assert!(seen.insert(sample_step(&fam, seed, &opts).unwrap()));
        }
    }

    #[test]
    fn sampler_honours_jump_floor() {
        let fam = BoundedFamily::new(3, s("1")).unwrap();
        let opts = SampleOptions {
            jump_floor: s("1/4"),
            ..SampleOptions::default()
        };
        for seed in 0..50 {
            let f = sample_step(&fam, seed, &opts).unwrap();
            assert!(f.jumps().iter().all(|(_, j)| j.abs() >= s("1/4")));
        }
    }
}
