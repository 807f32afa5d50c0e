//! Whitespace-insensitive parser for the scalar text format.
//!
//! Accepts sums of terms where each term is an optionally signed rational
//! `p` or `p/q`, optionally multiplied by `sqrt(d)`, or a bare `sqrt(d)`:
//! `3/4`, `-1/2 + 1/2*sqrt(5)`, `1 - sqrt(2)`, `2*sqrt(3) - 1/3`.
//! Decimal literals are refused.

use num_bigint::BigInt;

use super::{is_valid_base, ExactScalar, NumericError};

pub(super) fn parse_scalar(input: &str) -> Result<ExactScalar, NumericError> {
    let compact: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    let fail = |reason: &str| NumericError::Parse {
        input: input.to_owned(),
        reason: reason.to_owned(),
    };
    if compact.is_empty() {
        return Err(fail("empty input"));
    }
    if compact.contains('.') {
        return Err(fail("decimal literals are not accepted; write an exact fraction"));
    }
    let mut p = Cursor {
        chars: compact.as_bytes(),
        pos: 0,
    };
    let mut total = ExactScalar::zero();
    let mut first = true;
    while !p.done() {
        let negative = match p.peek() {
            Some(b'+') => {
                p.pos += 1;
                false
            }
            Some(b'-') => {
                p.pos += 1;
                true
            }
            _ if first => false,
            _ => return Err(fail("expected '+' or '-' between terms")),
        };
        first = false;
        // allow "a + -b*sqrt(d)" as emitted by the canonical writer
        let negative = if p.peek() == Some(b'-') {
            p.pos += 1;
            !negative
        } else {
            negative
        };
        let term = parse_term(&mut p).map_err(|r| fail(&r))?;
        total = total.try_add(&if negative { -term } else { term })?;
    }
    Ok(total)
}

struct Cursor<'a> {
    chars: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn done(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<u8> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.chars[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn integer(&mut self) -> Result<BigInt, String> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format!("expected digits at offset {start}"));
        }
        let digits = std::str::from_utf8(&self.chars[start..self.pos]).expect("ascii digits");
        digits.parse().map_err(|e| format!("{e}"))
    }
}

fn parse_sqrt(p: &mut Cursor<'_>) -> Result<ExactScalar, String> {
    let d = p.integer()?;
    if !p.eat(")") {
        return Err("unclosed sqrt(".into());
    }
    let d: u64 = d.try_into().map_err(|_| "radicand too large".to_owned())?;
    if !is_valid_base(d) {
        return Err(format!("sqrt({d}): radicand must be square-free and at least 2"));
    }
    ExactScalar::sqrt_of(d).map_err(|e| e.to_string())
}

fn parse_term(p: &mut Cursor<'_>) -> Result<ExactScalar, String> {
    if p.eat("sqrt(") {
        return parse_sqrt(p);
    }
    let num = p.integer()?;
    let den = if p.eat("/") {
        p.integer()?
    } else {
        BigInt::from(1)
    };
    let coefficient = ExactScalar::rational_big(num, den).map_err(|e| e.to_string())?;
    if p.eat("*") {
        if !p.eat("sqrt(") {
            return Err("expected sqrt( after '*'".into());
        }
        let root = parse_sqrt(p)?;
        return Ok(&coefficient * &root);
    }
    Ok(coefficient)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(t: &str) -> ExactScalar {
        parse_scalar(t).unwrap()
    }

    #[test]
    fn accepts_spacing_variants() {
        assert_eq!(ok(" 3 / 4 "), ok("3/4"));
        assert_eq!(ok("1/2 + -1/2 * sqrt( 5 )"), ok("1/2-1/2*sqrt(5)"));
        assert_eq!(ok("sqrt(5) - 1"), ok("-1 + 1*sqrt(5)"));
        assert_eq!(ok("+2"), ok("2"));
    }

    #[test]
    fn rejects_bad_input() {
        for bad in ["", "0.5", "1e3", "1/0", "sqrt(4)", "sqrt(1)", "1/", "2*3", "sqrt(5"] {
            assert!(parse_scalar(bad).is_err(), "{bad:?} should be rejected");
        }
        assert!(parse_scalar("sqrt(2) + sqrt(3)").is_err());
    }

    #[test]
    fn canonical_form_round_trips() {
        for t in ["-7/3", "0", "5/8 + -3/11*sqrt(7)", "0 + 1*sqrt(5)", "12"] {
            assert_eq!(ok(t).to_string(), t);
        }
    }
}
