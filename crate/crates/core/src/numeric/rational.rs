//! Rationals with an `i64` fast path.
//!
//! Orbit coordinates of dyadic starting points stay small for a very long
//! time, so nearly every operation in the hot loops fits in machine words.
//! Anything that overflows is transparently promoted to `BigRational`, and
//! big values are demoted again whenever they fit.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, ToPrimitive, Zero};

/// Exact rational number in lowest terms with positive denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub(crate) enum Rational {
    Small(Ratio<i64>),
    Big(BigRational),
}

impl Rational {
    pub(crate) fn zero() -> Self {
        Rational::Small(Ratio::from_integer(0))
    }

    pub(crate) fn one() -> Self {
        Rational::Small(Ratio::from_integer(1))
    }

    pub(crate) fn from_integer(n: i64) -> Self {
        Rational::Small(Ratio::from_integer(n))
    }

    pub(crate) fn from_bigint(n: BigInt) -> Self {
        Self::from_big(BigRational::from_integer(n))
    }

    /// `num / den`; `den` must be nonzero.
    pub(crate) fn new(num: BigInt, den: BigInt) -> Self {
        debug_assert!(!den.is_zero());
        Self::from_big(BigRational::new(num, den))
    }

    pub(crate) fn from_big(r: BigRational) -> Self {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            // i64::MIN has no negation; keep it out of the small path so that
            // `neg` and `abs` never overflow.
            (Some(n), Some(d)) if n != i64::MIN => Rational::Small(Ratio::new_raw(n, d)),
            _ => Rational::Big(r),
        }
    }

    pub(crate) fn to_big(&self) -> BigRational {
        match self {
            Rational::Small(r) => {
                BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
            }
            Rational::Big(r) => r.clone(),
        }
    }

    pub(crate) fn numer(&self) -> BigInt {
        match self {
            Rational::Small(r) => BigInt::from(*r.numer()),
            Rational::Big(r) => r.numer().clone(),
        }
    }

    pub(crate) fn denom(&self) -> BigInt {
        match self {
            Rational::Small(r) => BigInt::from(*r.denom()),
            Rational::Big(r) => r.denom().clone(),
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        match self {
            Rational::Small(r) => r.is_zero(),
            Rational::Big(r) => r.is_zero(),
        }
    }

    pub(crate) fn is_integer(&self) -> bool {
        match self {
            Rational::Small(r) => r.is_integer(),
            Rational::Big(r) => r.is_integer(),
        }
    }

    pub(crate) fn signum(&self) -> Ordering {
        match self {
            Rational::Small(r) => r.numer().cmp(&0),
            Rational::Big(r) => r.numer().sign().cmp(&num_bigint::Sign::NoSign),
        }
    }

    pub(crate) fn neg(&self) -> Self {
        match self {
            Rational::Small(r) => Rational::Small(-*r),
            Rational::Big(r) => Self::from_big(-r),
        }
    }

    pub(crate) fn add(&self, other: &Self) -> Self {
        if let (Rational::Small(a), Rational::Small(b)) = (self, other) {
            if let Some(r) = a.checked_add(b) {
                return Self::small_checked(r);
            }
        }
        Self::from_big(self.to_big() + other.to_big())
    }

    pub(crate) fn sub(&self, other: &Self) -> Self {
        if let (Rational::Small(a), Rational::Small(b)) = (self, other) {
            if let Some(r) = a.checked_sub(b) {
                return Self::small_checked(r);
            }
        }
        Self::from_big(self.to_big() - other.to_big())
    }

    pub(crate) fn mul(&self, other: &Self) -> Self {
        if let (Rational::Small(a), Rational::Small(b)) = (self, other) {
            if let Some(r) = a.checked_mul(b) {
                return Self::small_checked(r);
            }
        }
        Self::from_big(self.to_big() * other.to_big())
    }

    /// Panics on a zero divisor; callers check first.
    pub(crate) fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "rational division by zero");
        if let (Rational::Small(a), Rational::Small(b)) = (self, other) {
            if let Some(r) = a.checked_div(b) {
                return Self::small_checked(r);
            }
        }
        Self::from_big(self.to_big() / other.to_big())
    }

    fn small_checked(r: Ratio<i64>) -> Self {
        if *r.numer() == i64::MIN || *r.denom() == i64::MIN {
            Self::from_big(BigRational::new_raw(
                BigInt::from(*r.numer()),
                BigInt::from(*r.denom()),
            ))
        } else {
            Rational::Small(r)
        }
    }

    pub(crate) fn floor(&self) -> BigInt {
        match self {
            Rational::Small(r) => BigInt::from(r.numer().div_floor(r.denom())),
            Rational::Big(r) => r.numer().div_floor(r.denom()),
        }
    }

    pub(crate) fn pow(&self, exp: u32) -> Self {
        let mut acc = Rational::one();
        for _ in 0..exp {
            acc = acc.mul(self);
        }
        acc
    }

    pub(crate) fn to_f64(&self) -> f64 {
        match self {
            Rational::Small(r) => *r.numer() as f64 / *r.denom() as f64,
            Rational::Big(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Rational::Small(a), Rational::Small(b)) => {
                // Cross-multiplication in i128 cannot overflow for i64 parts.
                let lhs = *a.numer() as i128 * *b.denom() as i128;
                let rhs = *b.numer() as i128 * *a.denom() as i128;
                lhs.cmp(&rhs)
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (self.numer(), self.denom());
        if d.is_one() {
            write!(f, "{n}")
        } else {
            write!(f, "{n}/{d}")
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Sign of `a² - b²·d` for rationals `a`, `b` and a positive integer `d`.
pub(crate) fn cmp_square_vs_scaled_square(a: &Rational, b: &Rational, d: u64) -> Ordering {
    if let (Rational::Small(a), Rational::Small(b)) = (a, b) {
        // a = p/q, b = r/s:  compare (p s)² with (r q)² d
        let ps = (*a.numer() as i128 * *b.denom() as i128).unsigned_abs();
        let rq = (*b.numer() as i128 * *a.denom() as i128).unsigned_abs();
        if let (Some(l), Some(r)) = (
            ps.checked_mul(ps),
            rq.checked_mul(rq).and_then(|x| x.checked_mul(d as u128)),
        ) {
            return l.cmp(&r);
        }
    }
    let (a, b) = (a.to_big(), b.to_big());
    let lhs = a.numer() * b.denom();
    let rhs = b.numer() * a.denom();
    (&lhs * &lhs).cmp(&(&rhs * &rhs * BigInt::from(d)))
}
