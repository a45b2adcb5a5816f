//! Exact rational numbers and their textual forms.
//!
//! Every probability, valuation, distance and formula constant in this crate
//! is a [`Rational`]. The only accepted text syntax is `num/den` or a bare
//! integer; decimal and float notations are rejected on purpose so that
//! inputs never silently lose precision.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always kept in lowest terms.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed rational {text:?}: {reason}")]
pub struct RationalParseError {
    pub text: String,
    pub reason: &'static str,
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num / den`; panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn is_unit_interval(q: &Rational) -> bool {
    !q.is_negative() && *q <= Rational::one()
}

/// Parses `a/b`, `-a/b` or an integer `a`. Whitespace around the parts is
/// not accepted.
pub fn parse(text: &str) -> Result<Rational, RationalParseError> {
    let err = |reason| RationalParseError {
        text: text.to_string(),
        reason,
    };
    if text.contains(['.', 'e', 'E']) {
        return Err(err(
            "decimal or float notation is not accepted, use num/den",
        ));
    }
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (text, None),
    };
    let parse_int = |s: &str, what| {
        let digits = s.strip_prefix('-').unwrap_or(s);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err(what));
        }
        s.parse::<BigInt>().map_err(|_| err(what))
    };
    let num = parse_int(num, "numerator is not an integer")?;
    let den = match den {
        Some(d) => {
            if d.starts_with('-') {
                return Err(err("denominator must be positive"));
            }
            parse_int(d, "denominator is not an integer")?
        }
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(err("zero denominator"));
    }
    Ok(Rational::new(num, den))
}

/// Canonical `num/den` text (integers print without a denominator).
pub fn format(q: &Rational) -> String {
    q.to_string()
}

/// Decimal rendering with exactly `places` digits after the point, rounded
/// half away from zero. Advisory only.
pub fn to_decimal(q: &Rational, places: usize) -> String {
    let scale = BigInt::from(10u32).pow(places as u32);
    let scaled = q * Rational::from_integer(scale.clone());
    let (whole, frac) = scaled.numer().abs().div_rem(scaled.denom());
    let twice = frac * 2;
    let rounded = if twice >= *scaled.denom() {
        whole + 1
    } else {
        whole
    };
    let (int_part, frac_part) = rounded.div_rem(&scale);
    let sign = if q.is_negative() && !(&int_part + &frac_part).is_zero() {
        "-"
    } else {
        ""
    };
    if places == 0 {
        return format!("{sign}{int_part}");
    }
    format!(
        "{sign}{int_part}.{:0>width$}",
        frac_part.to_string(),
        width = places
    )
}

pub fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    (a - b).abs()
}

/// Nearest multiple of `step`, clamped to `[0, 1]`.
pub fn round_to_grid(value: &Rational, step: &Rational) -> Rational {
    let k = (value / step).round();
    let q = k * step;
    clamp_unit(q)
}

pub fn clamp_unit(q: Rational) -> Rational {
    if q.is_negative() {
        Rational::zero()
    } else if q > Rational::one() {
        Rational::one()
    } else {
        q
    }
}

/// Serde adapter storing a rational as its canonical string.
pub mod serde_str {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        super::parse(&text).map_err(serde::de::Error::custom)
    }
}
