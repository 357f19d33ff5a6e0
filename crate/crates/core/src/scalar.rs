//! Scalar abstraction shared by the exact and floating-point evaluators.
//!
//! Region geometry and the capacity formulas are written once against
//! [`Scalar`]; the exact path instantiates them with [`Rational`] and the
//! Gaussian outer bounds with `f64`.

use std::fmt::Debug;
use std::ops::Neg;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::ParseError;

/// Exact rational used throughout the analysis modules.
pub type Rational = BigRational;

pub trait Scalar: Num + Clone + Debug + PartialOrd + Neg<Output = Self> {
    fn from_i64(v: i64) -> Self;
    fn to_f64(&self) -> f64;

    /// Comparison allowance: zero for exact types, a small rounding
    /// tolerance for floats.
    fn epsilon() -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }

    /// JSON encoding: exact scalars are written as `"num/den"` strings.
    fn to_json(&self) -> serde_json::Value;
    fn from_json(v: &serde_json::Value) -> Result<Self, ParseError>;
}

macro_rules! float_scalar {
    ($($t:ty, $eps:expr);*) => ($(
        impl Scalar for $t {
            fn from_i64(v: i64) -> Self {
                v as $t
            }
            fn epsilon() -> Self {
                $eps
            }
            fn to_f64(&self) -> f64 {
                *self as f64
            }
            fn to_json(&self) -> serde_json::Value {
                serde_json::json!(*self as f64)
            }
            fn from_json(v: &serde_json::Value) -> Result<Self, ParseError> {
                match v {
                    serde_json::Value::Number(n) => n
                        .as_f64()
                        .map(|x| x as $t)
                        .ok_or_else(|| ParseError::Number(n.to_string())),
                    serde_json::Value::String(s) => Ok(Scalar::to_f64(&parse_rational(s)?) as $t),
                    other => Err(ParseError::Number(other.to_string())),
                }
            }
        }
    )*)
}

float_scalar!(f32, 1e-4; f64, 1e-9);

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn epsilon() -> Self {
        Self::zero()
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format_rational(self))
    }
    fn from_json(v: &serde_json::Value) -> Result<Self, ParseError> {
        rational_from_json(v)
    }
}

impl Scalar for Ratio<i64> {
    fn from_i64(v: i64) -> Self {
        Ratio::from_integer(v)
    }
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
    fn epsilon() -> Self {
        Self::zero()
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format!("{}/{}", self.numer(), self.denom()))
    }
    fn from_json(v: &serde_json::Value) -> Result<Self, ParseError> {
        let r = rational_from_json(v)?;
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Ok(Ratio::new(n, d)),
            _ => Err(ParseError::Number(format_rational(&r))),
        }
    }
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Parses `"a/b"`, `"a"`, or a decimal literal such as `"0.25"`.
///
/// Decimal literals are read exactly as decimal fractions, not via binary64.
pub fn parse_rational(s: &str) -> Result<Rational, ParseError> {
    let s = s.trim();
    let bad = || ParseError::Rational(s.to_string());
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.trim_start().starts_with('-');
        let w = if whole.is_empty() || whole == "-" || whole == "+" {
            BigInt::zero()
        } else {
            BigInt::from_str(whole).map_err(|_| bad())?
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let f = BigInt::from_str(frac).map_err(|_| bad())?;
        let magnitude = Rational::new(w.abs() * &scale + f, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    BigInt::from_str(s).map(Rational::from_integer).map_err(|_| bad())
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts a `"num/den"` string or a JSON number (binary64 promoted exactly).
pub fn rational_from_json(v: &serde_json::Value) -> Result<Rational, ParseError> {
    match v {
        serde_json::Value::String(s) => parse_rational(s),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(int(i))
            } else {
                let f = n.as_f64().ok_or_else(|| ParseError::Number(n.to_string()))?;
                Rational::from_f64(f).ok_or_else(|| ParseError::Number(n.to_string()))
            }
        }
        other => Err(ParseError::Number(other.to_string())),
    }
}

/// `x⁺ = max(x, 0)` on integers.
pub fn pos(x: i64) -> i64 {
    x.max(0)
}

pub fn is_unit_interval(p: &Rational) -> bool {
    !p.is_negative() && *p <= Rational::one()
}

/// Least common multiple of the denominators of `values`.
pub fn common_denominator(values: &[Rational]) -> BigInt {
    use num_integer::Integer;
    values
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_integer_and_decimal() {
        assert_eq!(parse_rational("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_rational(" 3 ").unwrap(), int(3));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational("-0.5").unwrap(), rat(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn json_numbers_promote_exactly() {
        let v = serde_json::json!(0.5);
        assert_eq!(rational_from_json(&v).unwrap(), rat(1, 2));
        let v = serde_json::json!("2/6");
        assert_eq!(rational_from_json(&v).unwrap(), rat(1, 3));
        assert_eq!(format_rational(&rat(2, 6)), "1/3");
    }

    #[test]
    fn generic_helpers_agree_across_scalars() {
        assert_eq!(<f64 as Scalar>::from_ratio(1, 4), 0.25);
        assert_eq!(<Rational as Scalar>::from_ratio(1, 4), rat(1, 4));
        assert_eq!(Ratio::<i64>::from_ratio(2, 4), Ratio::new(1, 2));
        assert_eq!(Scalar::max_of(rat(1, 3), rat(1, 2)), rat(1, 2));
    }

    #[test]
    fn lcm_of_denominators() {
        assert_eq!(common_denominator(&[rat(1, 2), rat(2, 3), int(4)]), BigInt::from(6));
    }
}
