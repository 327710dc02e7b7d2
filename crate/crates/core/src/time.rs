//! Exact rational arithmetic for instants, durations and speedups.
//!
//! Every time in a simulation is a rational number kept in lowest terms. The
//! backing integers are 128-bit and every operation is checked: an overflow
//! panics with a message instead of wrapping. The `checked_*` methods expose
//! the same operations without panicking.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("division by zero speedup")]
    ZeroSpeedup,
    #[error("rational overflow")]
    Overflow,
    #[error("cannot parse rational {0:?}: expected \"num/den\" or an integer")]
    Parse(String),
}

/// An exact rational number in lowest terms with a positive denominator.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational(Ratio<i128>);

/// Instants and durations are both plain rationals.
pub type TimePoint = Rational;

impl Rational {
    pub const ZERO: Rational = Rational(Ratio::new_raw(0, 1));
    pub const ONE: Rational = Rational(Ratio::new_raw(1, 1));

    pub fn new(numer: i128, denom: i128) -> Result<Self, TimeError> {
        if denom == 0 {
            return Err(TimeError::ZeroDenominator);
        }
        // Ratio::new reduces and normalizes the sign; guard the one input
        // (i128::MIN) whose negation overflows during normalization.
        if numer == i128::MIN || denom == i128::MIN {
            return Err(TimeError::Overflow);
        }
        Ok(Rational(Ratio::new(numer, denom)))
    }

    /// Panicking constructor for literals in code and tests.
    pub fn frac(numer: i128, denom: i128) -> Self {
        Self::new(numer, denom).expect("valid rational literal")
    }

    pub fn int(value: i128) -> Self {
        Rational(Ratio::from_integer(value))
    }

    pub fn from_u64(value: u64) -> Self {
        Self::int(i128::from(value))
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, TimeError> {
        self.0.checked_add(&other.0).map(Rational).ok_or(TimeError::Overflow)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, TimeError> {
        self.0.checked_sub(&other.0).map(Rational).ok_or(TimeError::Overflow)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, TimeError> {
        self.0.checked_mul(&other.0).map(Rational).ok_or(TimeError::Overflow)
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, TimeError> {
        if other.is_zero() {
            return Err(TimeError::ZeroDenominator);
        }
        self.0.checked_div(&other.0).map(Rational).ok_or(TimeError::Overflow)
    }

    /// Duration of a task of `cost` units run at `speedup`: exactly `cost / speedup`.
    pub fn div_by_speedup(cost: u64, speedup: &Rational) -> Result<Self, TimeError> {
        if speedup.is_zero() {
            return Err(TimeError::ZeroSpeedup);
        }
        Rational::from_u64(cost).checked_div(speedup)
    }

    pub fn floor(&self) -> i128 {
        Integer::div_floor(self.0.numer(), self.0.denom())
    }

    pub fn ceil(&self) -> i128 {
        Integer::div_ceil(self.0.numer(), self.0.denom())
    }

    pub fn to_f64(&self) -> f64 {
        let (n, d) = (self.numer(), self.denom());
        let whole = Integer::div_floor(&n, &d);
        let rest = n - whole * d;
        whole.to_f64().unwrap_or(f64::NAN) + rest.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::ZERO
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

macro_rules! checked_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                match self.$checked(&rhs) {
                    Ok(value) => value,
                    Err(err) => panic!("{} of {} and {}: {}", stringify!($method), self, rhs, err),
                }
            }
        }
    };
}

checked_binop!(Add, add, checked_add);
checked_binop!(Sub, sub, checked_sub);
checked_binop!(Mul, mul, checked_mul);
checked_binop!(Div, div, checked_div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational::ZERO - self
    }
}

impl From<u64> for Rational {
    fn from(value: u64) -> Self {
        Rational::from_u64(value)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl FromStr for Rational {
    type Err = TimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        let parse = |part: &str| part.trim().parse::<i128>().map_err(|_| TimeError::Parse(s.to_string()));
        match text.split_once('/') {
            Some((numer, denom)) => Rational::new(parse(numer)?, parse(denom)?),
            None => Ok(Rational::int(parse(text)?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Int(i64),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(text) => text.parse().map_err(serde::de::Error::custom),
            Repr::Int(value) => Ok(Rational::int(i128::from(value))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn adds_fractions() {
        assert_eq!(Rational::frac(1, 2) + Rational::frac(1, 3), Rational::frac(5, 6));
    }

    #[test]
    fn normalizes_on_construction() {
        assert_eq!(Rational::frac(2, 4).cmp(&Rational::frac(1, 2)), Ordering::Equal);
        let r = Rational::frac(6, -4);
        assert_eq!((r.numer(), r.denom()), (-3, 2));
    }

    #[test]
    fn divides_cost_by_speedup() {
        let d = Rational::div_by_speedup(2, &Rational::frac(6, 5)).unwrap();
        assert_eq!(d, Rational::frac(5, 3));
        assert_eq!(Rational::div_by_speedup(2, &Rational::ZERO), Err(TimeError::ZeroSpeedup));
    }

    #[test]
    fn rejects_zero_denominator() {
        assert_eq!(Rational::new(1, 0), Err(TimeError::ZeroDenominator));
        assert!("3/0".parse::<Rational>().is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let big = Rational::int(i128::MAX / 2 + 1);
        assert_eq!(big.checked_add(&big), Err(TimeError::Overflow));
    }

    #[test]
    #[should_panic(expected = "overflow")]
    fn operator_overflow_panics() {
        let big = Rational::int(i128::MAX / 2 + 1);
        let _ = big + big;
    }

    #[test]
    fn parses_integer_shorthand_and_fractions() {
        assert_eq!("7".parse::<Rational>().unwrap(), Rational::int(7));
        assert_eq!(" 3/6 ".parse::<Rational>().unwrap(), Rational::frac(1, 2));
        assert_eq!("-1/3".parse::<Rational>().unwrap(), Rational::frac(-1, 3));
        assert!("1.5".parse::<Rational>().is_err());
    }

    #[test]
    fn floor_and_ceil() {
        assert_eq!(Rational::frac(7, 2).floor(), 3);
        assert_eq!(Rational::frac(7, 2).ceil(), 4);
        assert_eq!(Rational::frac(-7, 2).floor(), -4);
        assert_eq!(Rational::frac(-7, 2).ceil(), -3);
        assert_eq!(Rational::int(4).ceil(), 4);
    }

    #[test]
    fn json_forms() {
        let r: Rational = serde_json::from_str("\"5/10\"").unwrap();
        assert_eq!(r, Rational::frac(1, 2));
        let r: Rational = serde_json::from_str("4").unwrap();
        assert_eq!(r, Rational::int(4));
        assert_eq!(serde_json::to_string(&Rational::int(4)).unwrap(), "\"4/1\"");
    }

    proptest! {
        #[test]
        fn arithmetic_is_exact(a in -1000i128..1000, b in 1i128..50, c in -1000i128..1000, d in 1i128..50) {
            let x = Rational::frac(a, b);
            let y = Rational::frac(c, d);
            // Cross-multiplied integer oracle.
            let sum = x + y;
            prop_assert_eq!(sum.numer() * (b * d), (a * d + c * b) * sum.denom());
            prop_assert_eq!((x + y) - y, x);
            prop_assert_eq!(x == y, a * d == c * b);
            prop_assert_eq!(x < y, a * d < c * b);
        }

        #[test]
        fn display_parse_round_trip(a in -10_000i128..10_000, b in 1i128..10_000) {
            let x = Rational::frac(a, b);
            prop_assert_eq!(x.to_string().parse::<Rational>().unwrap(), x);
        }
    }
}
