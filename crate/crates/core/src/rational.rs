//! Exact rational arithmetic helpers shared by the load formulas.
//!
//! Every load, ratio, and threshold in this crate is computed over
//! arbitrary-precision fractions; floating point only ever appears in
//! display output, derived from an already-rounded decimal string.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision fraction, always reduced with a positive denominator.
pub type Rational = num_rational::BigRational;

/// Shorthand for a rational from two machine integers.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Rational from an unsigned integer.
pub fn rat_int(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Binomial coefficient `C(n, k)` by the multiplicative formula.
///
/// Each intermediate product is divisible by the running factorial, so the
/// division below is always exact. Returns 0 when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut result = BigInt::one();
    for i in 0..k {
        result = result * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    result
}

/// Errors from [`parse_rational`].
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer `{0}` in rational literal")]
    BadInteger(String),
    #[error("zero denominator in rational literal")]
    ZeroDenominator,
}

/// Parse `"p/q"` or a bare integer `"n"` into a rational.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let parse_int = |s: &str| -> Result<BigInt, ParseRationalError> {
        s.trim()
            .parse::<BigInt>()
            .map_err(|_| ParseRationalError::BadInteger(s.trim().to_string()))
    };
    match text.split_once('/') {
        None => Ok(Rational::from_integer(parse_int(text)?)),
        Some((num, den)) => {
            let den = parse_int(den)?;
            if den.is_zero() {
                return Err(ParseRationalError::ZeroDenominator);
            }
            Ok(Rational::new(parse_int(num)?, den))
        }
    }
}

/// Render as `"p/q"`, or just `"p"` for integers.
pub fn format_rational(x: &Rational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Fixed-point decimal rendering with round-half-up, e.g. four places for
/// the ratio tables.
pub fn decimal(x: &Rational, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    // round(|x| * scale) with ties going up, then re-attach the sign.
    let scaled = x.abs() * Rational::from_integer(scale.clone());
    let rounded: BigInt = (scaled.numer() * 2 + scaled.denom()) / (scaled.denom() * 2);
    let sign = if x.is_negative() && !rounded.is_zero() {
        "-"
    } else {
        ""
    };
    let whole = &rounded / &scale;
    let frac = &rounded % &scale;
    if places == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{frac:0>width$}", width = places as usize)
    }
}

/// Four-decimal form used by the printed ratio tables.
pub fn dec4(x: &Rational) -> String {
    decimal(x, 4)
}

/// Lossy float view for display payloads. Not used in any formula path.
pub fn approx_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
