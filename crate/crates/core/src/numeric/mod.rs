//! Exact ordered-field scalars: rationals and real quadratic extensions
//! `a + b·√d`.
//!
//! All dynamics in this crate (orbit points, interval endpoints, skewing
//! function values, vertical coordinates) are carried by [`ExactScalar`], so
//! membership of a point in a half-open interval is always decided exactly.

mod parse;
mod rational;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub(crate) use rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("incompatible quadratic bases sqrt({0}) and sqrt({1})")]
    IncompatibleBases(u64, u64),
    #[error("sqrt({0}) is not a valid base: the radicand must be square-free and at least 2")]
    InvalidBase(u64),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("cannot parse scalar {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Rational(Rational),
    /// `a + b·√d` with `b ≠ 0`.
    Quadratic { a: Rational, b: Rational, d: u64 },
}

/// A number in ℚ or in ℚ(√d) for a square-free `d ≥ 2`.
///
/// Values are always canonical: a quadratic value whose irrational part
/// vanishes is stored as a rational, so structural equality is numeric
/// equality.
///
/// The arithmetic operators panic when the operands live in different
/// quadratic fields (or on division by zero), like integer division does;
/// use the `try_*` methods where that can happen.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactScalar(Repr);

impl ExactScalar {
    pub fn zero() -> Self {
        ExactScalar(Repr::Rational(Rational::zero()))
    }

    pub fn one() -> Self {
        ExactScalar(Repr::Rational(Rational::one()))
    }

    pub fn from_integer(n: i64) -> Self {
        ExactScalar(Repr::Rational(Rational::from_integer(n)))
    }

    /// The rational `num/den`, reduced.
    pub fn rational(num: i64, den: i64) -> Result<Self, NumericError> {
        Self::rational_big(BigInt::from(num), BigInt::from(den))
    }

    pub fn rational_big(num: BigInt, den: BigInt) -> Result<Self, NumericError> {
        if den.is_zero() {
            return Err(NumericError::ZeroDenominator);
        }
        Ok(ExactScalar(Repr::Rational(Rational::new(num, den))))
    }

    /// `a + b·√d` where `a`, `b` must themselves be rational.
    pub fn quadratic(a: &ExactScalar, b: &ExactScalar, d: u64) -> Result<Self, NumericError> {
        if !is_valid_base(d) {
            return Err(NumericError::InvalidBase(d));
        }
        let (Repr::Rational(a), Repr::Rational(b)) = (&a.0, &b.0) else {
            return Err(NumericError::Parse {
                input: format!("{a} + ({b})*sqrt({d})"),
                reason: "quadratic coefficients must be rational".into(),
            });
        };
        Ok(Self::from_parts(a.clone(), b.clone(), d))
    }

    /// `√d` itself.
    pub fn sqrt_of(d: u64) -> Result<Self, NumericError> {
        Self::quadratic(&Self::zero(), &Self::one(), d)
    }

    fn from_parts(a: Rational, b: Rational, d: u64) -> Self {
        if b.is_zero() {
            ExactScalar(Repr::Rational(a))
        } else {
            ExactScalar(Repr::Quadratic { a, b, d })
        }
    }

    fn parts(&self) -> (&Rational, Option<(&Rational, u64)>) {
        match &self.0 {
            Repr::Rational(a) => (a, None),
            Repr::Quadratic { a, b, d } => (a, Some((b, *d))),
        }
    }

    /// Rational part `a` of `a + b√d`.
    pub fn rational_part(&self) -> ExactScalar {
        ExactScalar(Repr::Rational(self.parts().0.clone()))
    }

    /// Coefficient `b` of `a + b√d` (zero for rationals).
    pub fn irrational_part(&self) -> ExactScalar {
        match &self.0 {
            Repr::Rational(_) => Self::zero(),
            Repr::Quadratic { b, .. } => ExactScalar(Repr::Rational(b.clone())),
        }
    }

    /// The radicand when the value is irrational.
    pub fn base(&self) -> Option<u64> {
        match &self.0 {
            Repr::Rational(_) => None,
            Repr::Quadratic { d, .. } => Some(*d),
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.0, Repr::Rational(_))
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.0, Repr::Rational(r) if r.is_zero())
    }

    pub fn is_integer(&self) -> bool {
        matches!(&self.0, Repr::Rational(r) if r.is_integer())
    }

    /// Numerator and denominator of a rational value.
    pub fn as_fraction(&self) -> Option<(BigInt, BigInt)> {
        match &self.0 {
            Repr::Rational(r) => Some((r.numer(), r.denom())),
            Repr::Quadratic { .. } => None,
        }
    }

    /// Common base of two operands, failing on two distinct radicands.
    pub fn common_base(&self, other: &ExactScalar) -> Result<Option<u64>, NumericError> {
        match (self.base(), other.base()) {
            (Some(x), Some(y)) if x != y => Err(NumericError::IncompatibleBases(x, y)),
            (Some(x), _) | (_, Some(x)) => Ok(Some(x)),
            (None, None) => Ok(None),
        }
    }

    pub fn try_add(&self, other: &ExactScalar) -> Result<ExactScalar, NumericError> {
        let d = self.common_base(other)?;
        Ok(match (&self.0, &other.0) {
            (Repr::Rational(x), Repr::Rational(y)) => ExactScalar(Repr::Rational(x.add(y))),
            _ => {
                let (a, b) = self.coeffs();
                let (c, e) = other.coeffs();
                Self::from_parts(a.add(&c), b.add(&e), d.expect("irrational operand"))
            }
        })
    }

    pub fn try_sub(&self, other: &ExactScalar) -> Result<ExactScalar, NumericError> {
        let d = self.common_base(other)?;
        Ok(match (&self.0, &other.0) {
            (Repr::Rational(x), Repr::Rational(y)) => ExactScalar(Repr::Rational(x.sub(y))),
            _ => {
                let (a, b) = self.coeffs();
                let (c, e) = other.coeffs();
                Self::from_parts(a.sub(&c), b.sub(&e), d.expect("irrational operand"))
            }
        })
    }

    pub fn try_mul(&self, other: &ExactScalar) -> Result<ExactScalar, NumericError> {
        let d = self.common_base(other)?;
        Ok(match (&self.0, &other.0) {
            (Repr::Rational(x), Repr::Rational(y)) => ExactScalar(Repr::Rational(x.mul(y))),
            _ => {
                let d = d.expect("irrational operand");
                let (a, b) = self.coeffs();
                let (c, e) = other.coeffs();
                let dq = Rational::from_integer(d as i64);
                // (a + b√d)(c + e√d) = (ac + bed) + (ae + bc)√d
                let re = a.mul(&c).add(&b.mul(&e).mul(&dq));
                let im = a.mul(&e).add(&b.mul(&c));
                Self::from_parts(re, im, d)
            }
        })
    }

    pub fn try_div(&self, other: &ExactScalar) -> Result<ExactScalar, NumericError> {
        let d = self.common_base(other)?;
        if other.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        Ok(match (&self.0, &other.0) {
            (_, Repr::Rational(y)) => {
                let (a, b) = self.coeffs();
                match d {
                    Some(d) => Self::from_parts(a.div(y), b.div(y), d),
                    None => ExactScalar(Repr::Rational(a.div(y))),
                }
            }
            _ => {
                let d = d.expect("irrational operand");
                let (a, b) = self.coeffs();
                let (c, e) = other.coeffs();
                let dq = Rational::from_integer(d as i64);
                // multiply through by the conjugate c − e√d
                let norm = c.mul(&c).sub(&e.mul(&e).mul(&dq));
                let re = a.mul(&c).sub(&b.mul(&e).mul(&dq)).div(&norm);
                let im = b.mul(&c).sub(&a.mul(&e)).div(&norm);
                Self::from_parts(re, im, d)
            }
        })
    }

    fn coeffs(&self) -> (Rational, Rational) {
        match &self.0 {
            Repr::Rational(a) => (a.clone(), Rational::zero()),
            Repr::Quadratic { a, b, .. } => (a.clone(), b.clone()),
        }
    }

    /// Exact sign as an ordering against zero.
    pub fn signum(&self) -> Ordering {
        match &self.0 {
            Repr::Rational(a) => a.signum(),
            Repr::Quadratic { a, b, d } => {
                let (sa, sb) = (a.signum(), b.signum());
                if sa == Ordering::Equal || sa == sb {
                    return sb;
                }
                // opposite signs: the larger of a² and b²d wins
                match rational::cmp_square_vs_scaled_square(a, b, *d) {
                    Ordering::Greater => sa,
                    Ordering::Less => sb,
                    Ordering::Equal => unreachable!("√{d} is irrational"),
                }
            }
        }
    }

    pub fn sign(&self) -> Sign {
        match self.signum() {
            Ordering::Less => Sign::Negative,
            Ordering::Equal => Sign::Zero,
            Ordering::Greater => Sign::Positive,
        }
    }

    /// Exact comparison of real values.
    pub fn try_cmp(&self, other: &ExactScalar) -> Result<Ordering, NumericError> {
        if let (Repr::Rational(x), Repr::Rational(y)) = (&self.0, &other.0) {
            return Ok(x.cmp(y));
        }
        Ok(self.try_sub(other)?.signum())
    }

    pub fn abs(&self) -> ExactScalar {
        if self.signum() == Ordering::Less {
            -self
        } else {
            self.clone()
        }
    }

    pub fn min_of<'a>(&'a self, other: &'a ExactScalar) -> &'a ExactScalar {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max_of<'a>(&'a self, other: &'a ExactScalar) -> &'a ExactScalar {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Largest integer not exceeding the value.
    pub fn floor(&self) -> BigInt {
        match &self.0 {
            Repr::Rational(a) => a.floor(),
            Repr::Quadratic { a, b, d } => {
                // b√d = ±√(n²d)/m with b = n/m; bracket it by the integer root
                let (n, m) = (b.numer(), b.denom());
                let root = (&n * &n * BigInt::from(*d)).sqrt();
                let approx = if n.is_negative() {
                    Rational::new(-root, m)
                } else {
                    Rational::new(root, m)
                };
                let mut z = a.add(&approx).floor();
                // the true value lies within 1/m of the approximation
                loop {
                    let zs = ExactScalar(Repr::Rational(Rational::from_bigint(z.clone())));
                    if *self < zs {
                        z -= 1;
                        continue;
                    }
                    let next = ExactScalar(Repr::Rational(Rational::from_bigint(&z + 1)));
                    if *self >= next {
                        z += 1;
                        continue;
                    }
                    return z;
                }
            }
        }
    }

    /// Reduction modulo 1 into `[0, 1)`.
    pub fn frac(&self) -> ExactScalar {
        let fl = ExactScalar(Repr::Rational(Rational::from_bigint(self.floor())));
        self - &fl
    }

    pub fn pow(&self, exp: u32) -> ExactScalar {
        if let Repr::Rational(a) = &self.0 {
            return ExactScalar(Repr::Rational(a.pow(exp)));
        }
        let mut acc = ExactScalar::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// Multiply by `2^-k`.
    pub fn halve_times(&self, k: u32) -> ExactScalar {
        let den = ExactScalar(Repr::Rational(Rational::from_bigint(BigInt::one() << k)));
        self / &den
    }

    /// Floating-point value for reporting and plotting only.
    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Rational(a) => a.to_f64(),
            Repr::Quadratic { a, b, d } => a.to_f64() + b.to_f64() * (*d as f64).sqrt(),
        }
    }

    /// Decimal rendering correct to `precision` bits: the value is rounded to
    /// `⌈precision·log₁₀2⌉` fractional digits (half away from zero) and
    /// trailing zeros are dropped. Reporting only.
    pub fn approximate(&self, precision: u32) -> String {
        let precision = precision.max(1);
        let digits = ((precision as f64) * std::f64::consts::LOG10_2).ceil() as u32;
        if self.is_zero() {
            return "0".to_owned();
        }
        let negative = self.signum() == Ordering::Less;
        let magnitude = self.abs();
        let scale = ExactScalar::from_bigint(BigInt::from(10u32).pow(digits));
        // round half up on the magnitude: floor(|x|·10^k + 1/2)
        let half = ExactScalar::rational(1, 2).expect("nonzero denominator");
        let scaled = &(&magnitude * &scale) + &half;
        let units = scaled.floor();
        let text = units.to_string();
        let (int_part, frac_part) = if text.len() > digits as usize {
            let split = text.len() - digits as usize;
            (text[..split].to_owned(), text[split..].to_owned())
        } else {
            ("0".to_owned(), format!("{:0>width$}", text, width = digits as usize))
        };
        let frac_part = frac_part.trim_end_matches('0');
        if int_part == "0" && frac_part.is_empty() {
            return "0".to_owned();
        }
        let mut out = String::new();
        if negative {
            out.push('-');
        }
        out.push_str(&int_part);
        if !frac_part.is_empty() {
            out.push('.');
            out.push_str(frac_part);
        }
        out
    }

    pub fn from_bigint(n: BigInt) -> ExactScalar {
        ExactScalar(Repr::Rational(Rational::from_bigint(n)))
    }
}

/// Exact sign of a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

/// Square-free and at least 2.
pub fn is_valid_base(d: u64) -> bool {
    if d < 2 {
        return false;
    }
    let mut n = d;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return false;
            }
        }
        p += 1;
    }
    true
}

/// Total order on the real values.
///
/// # Panics
/// When the operands live in distinct quadratic fields. Every structure in
/// this crate checks field compatibility at construction, so ordering is
/// only ever requested between compatible values.
impl Ord for ExactScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        self.try_cmp(other).expect("comparison across quadratic fields")
    }
}

impl PartialOrd for ExactScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $try:ident) => {
        impl $trait<&ExactScalar> for &ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &ExactScalar) -> ExactScalar {
                match self.$try(rhs) {
                    Ok(v) => v,
                    Err(e) => panic!("{}: {e}", stringify!($method)),
                }
            }
        }
        impl $trait<ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &ExactScalar) -> ExactScalar {
                (&self).$method(rhs)
            }
        }
        impl $trait<ExactScalar> for &ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);
forward_binop!(Div, div, try_div);

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        match &self.0 {
            Repr::Rational(a) => ExactScalar(Repr::Rational(a.neg())),
            Repr::Quadratic { a, b, d } => ExactScalar(Repr::Quadratic {
                a: a.neg(),
                b: b.neg(),
                d: *d,
            }),
        }
    }
}

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        -&self
    }
}

impl From<i64> for ExactScalar {
    fn from(n: i64) -> Self {
        ExactScalar::from_integer(n)
    }
}

impl Default for ExactScalar {
    fn default() -> Self {
        ExactScalar::zero()
    }
}

/// Canonical text: `p/q` (or `p` for integers) for rationals and
/// `p/q + r/s*sqrt(d)` for quadratics, all parts in lowest terms.
impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.parts() {
            (a, None) => write!(f, "{a}"),
            (a, Some((b, d))) => write!(f, "{a} + {b}*sqrt({d})"),
        }
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for ExactScalar {
    type Err = NumericError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse::parse_scalar(s)
    }
}

impl Serialize for ExactScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExactScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parse helper used throughout the crate's tests and examples.
///
/// # Panics
/// On malformed input.
pub fn s(text: &str) -> ExactScalar {
    text.parse()
        .unwrap_or_else(|e| panic!("bad scalar literal {text:?}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_sum() {
        assert_eq!(s("1/3") + s("1/6"), s("1/2"));
    }

    #[test]
    fn conjugate_product_is_rational() {
        let p = s("1 + 1*sqrt(5)") * s("1 - 1*sqrt(5)");
        assert_eq!(p, s("-4"));
        assert!(p.is_rational());
    }

    #[test]
    fn quotient_by_conjugate() {
        let q = s("3 + sqrt(2)") / s("1 + sqrt(2)");
        assert_eq!(q, s("-1 + 2*sqrt(2)"));
        // multiply back
        assert_eq!(&q * &s("1 + sqrt(2)"), s("3 + sqrt(2)"));
    }

    #[test]
    fn errors_on_zero_division_and_mixed_bases() {
        assert_eq!(s("1").try_div(&s("0")), Err(NumericError::DivisionByZero));
        assert_eq!(
            s("sqrt(2)").try_add(&s("sqrt(3)")),
            Err(NumericError::IncompatibleBases(2, 3))
        );
        assert!(s("sqrt(2)").try_cmp(&s("sqrt(5)")).is_err());
    }

    #[test]
    fn signs() {
        assert_eq!(s("3 - 2*sqrt(2)").sign(), Sign::Positive);
        assert_eq!(s("0").sign(), Sign::Zero);
        assert_eq!(s("2 - sqrt(5)").sign(), Sign::Negative);
        assert_eq!(s("-3 + 2*sqrt(2)").sign(), Sign::Negative);
    }

    #[test]
    fn comparisons() {
        assert_eq!(s("1/3").cmp(&s("2/6")), Ordering::Equal);
        assert_eq!(s("1 + sqrt(2)").cmp(&s("2")), Ordering::Greater);
        // (√5 − 1)/2 − 3/5 = −11/10 + √5/2 > 0 since 125 > 121
        assert_eq!(s("-1/2 + 1/2*sqrt(5)").cmp(&s("3/5")), Ordering::Greater);
    }

    #[test]
    fn frac_examples() {
        assert_eq!(s("7/3").frac(), s("1/3"));
        assert_eq!(s("1/2 + 1/2*sqrt(5)").frac(), s("-1/2 + 1/2*sqrt(5)"));
        assert_eq!(s("-1/4").frac(), s("3/4"));
        assert_eq!(s("-1/2 - 1/2*sqrt(5)").frac(), s("3/2 - 1/2*sqrt(5)"));
    }

    #[test]
    fn quadratic_with_zero_coefficient_is_rational() {
        let q = ExactScalar::quadratic(&s("3/4"), &s("0"), 5).unwrap();
        assert_eq!(q, s("3/4"));
        assert!(q.is_rational());
        assert_eq!(ExactScalar::quadratic(&s("1"), &s("1"), 4), Err(NumericError::InvalidBase(4)));
        assert_eq!(ExactScalar::quadratic(&s("1"), &s("1"), 1), Err(NumericError::InvalidBase(1)));
    }

    #[test]
    fn approximations() {
        assert_eq!(s("1/3").approximate(20), "0.3333333");
        assert_eq!(s("0").approximate(64), "0");
        assert_eq!(s("-1/2 + 1/2*sqrt(5)").approximate(30), "0.6180339887");
        assert_eq!(s("-7/4").approximate(10), "-1.75");
        assert_eq!(s("1/2").approximate(1), "0.5");
    }

    #[test]
    fn canonical_text() {
        assert_eq!(s("2/4").to_string(), "1/2");
        assert_eq!(s("6/3").to_string(), "2");
        assert_eq!(s("1/2 - 1/2 * sqrt(5)").to_string(), "1/2 + -1/2*sqrt(5)");
        assert_eq!(s("sqrt(5)").to_string(), "0 + 1*sqrt(5)");
    }

    #[test]
    fn floor_of_large_quadratic() {
        // 10^12·√2 = 1414213562373.095...
        let v = s("1000000000000*sqrt(2)");
        assert_eq!(v.floor(), BigInt::from(1_414_213_562_373i64));
        assert_eq!((-v).floor(), BigInt::from(-1_414_213_562_374i64));
    }
}
