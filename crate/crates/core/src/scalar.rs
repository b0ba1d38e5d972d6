//! Numeric backends.
//!
//! Every trajectory of the relay equation is piecewise affine with slopes `1`
//! and `-a`, so all event times and values stay rational whenever `a` and the
//! initial data are rational. [`Rational`] gives bit-exact results; `f64` uses
//! an absolute tolerance of `1e-12` for event coincidence and zero snapping.

use std::fmt::{Debug, Display};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Num, Signed, ToPrimitive, Zero};

use crate::error::{RelayError, Result};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Absolute tolerance used by the floating-point backend.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + Send + Sync + 'static
{
    /// `true` when arithmetic is exact.
    const EXACT: bool;

    /// Absolute tolerance for event coincidence (zero for exact backends).
    fn tolerance() -> Self;

    fn from_int(n: i64) -> Self;

    fn from_ratio(numer: i64, denom: i64) -> Self;

    /// Exact conversion for rationals (binary expansion), identity for floats.
    fn from_f64(x: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    fn floor(&self) -> Self;

    /// Parses decimal (`-0.75`, `1e-3`), integer or `p/q` notation.
    fn parse(s: &str) -> Result<Self>;

    /// Text form used in CSV output: shortest round-trip decimal for floats,
    /// `p/q` for rationals.
    fn render(&self) -> String;

    fn to_json(&self) -> serde_json::Value;

    fn near(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tolerance()
    }

    fn near_zero(&self) -> bool {
        self.abs() <= Self::tolerance()
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        FLOAT_TOLERANCE
    }

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn floor(&self) -> Self {
        f64::floor(*self)
    }

    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().map_err(|_| bad_number(s))?;
            let d: f64 = d.trim().parse().map_err(|_| bad_number(s))?;
            if d == 0.0 {
                return Err(bad_number(s));
            }
            return Ok(n / d);
        }
        let v: f64 = s.parse().map_err(|_| bad_number(s))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad_number(s))
        }
    }

    fn render(&self) -> String {
        format!("{self}")
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn tolerance() -> Self {
        Rational::zero()
    }

    fn from_int(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Rational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn from_f64(x: f64) -> Option<Self> {
        Rational::from_float(x)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn floor(&self) -> Self {
        Rational::floor(self)
    }

    fn parse(s: &str) -> Result<Self> {
        parse_rational(s.trim()).ok_or_else(|| bad_number(s))
    }

    fn render(&self) -> String {
        format!("{self}")
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.render())
    }
}

fn bad_number(s: &str) -> RelayError {
    RelayError::Parse(format!("not a number: {s:?}"))
}

fn parse_rational(s: &str) -> Option<Rational> {
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str_radix(n.trim(), 10).ok()?;
        let d = BigInt::from_str_radix(d.trim(), 10).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str_radix(if all.is_empty() { "0" } else { &all }, 10).ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Helper for small integer constants in generic code.
pub(crate) fn int<S: Scalar>(n: i64) -> S {
    S::from_int(n)
}

pub(crate) fn one<S: Scalar>() -> S {
    S::one()
}
