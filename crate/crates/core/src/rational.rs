//! Exact rational scalars and their canonical `p/q` text form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn half() -> Rational {
    rat(1, 2)
}

/// Canonical lowest-terms form, always with an explicit denominator (`2/1`, `-1/3`).
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `p/q` or a bare integer `p`. Decimal notation is rejected.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::BadRational(s.to_string());
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let valid = |t: &str, signed: bool| {
        let digits = if signed {
            t.strip_prefix('-').unwrap_or(t)
        } else {
            t
        };
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid(p, true) || !valid(q, false) {
        return Err(bad());
    }
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(p, q))
}

pub fn min_rational<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if b < a {
        b
    } else {
        a
    }
}

/// Least common multiple of the denominators of `values` (1 for an empty input).
pub fn common_denominator<'a, I>(values: I) -> BigInt
where
    I: IntoIterator<Item = &'a Rational>,
{
    values
        .into_iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

/// `q * scale` as an `i128`, provided the product is an integer that fits.
pub fn scaled_i128(q: &Rational, scale: &BigInt) -> Result<i128> {
    let scaled = q * Rational::from_integer(scale.clone());
    if !scaled.is_integer() {
        return Err(Error::Invalid(format!(
            "{} is not a multiple of 1/{scale}",
            format_rational(q)
        )));
    }
    scaled.to_integer().to_i128().ok_or(Error::Overflow)
}

pub fn from_scaled(n: i128, scale: &BigInt) -> Rational {
    Rational::new(BigInt::from(n), scale.clone())
}

pub fn abs(q: &Rational) -> Rational {
    q.abs()
}

pub mod serde_rational {
    //! Serde adapter storing rationals as canonical `p/q` strings.
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_format() {
        assert_eq!(format_rational(&rat(4, 8)), "1/2");
        assert_eq!(format_rational(&int(2)), "2/1");
        assert_eq!(format_rational(&rat(3, -9)), "-1/3");
        assert_eq!(format_rational(&int(0)), "0/1");
    }

    #[test]
    fn parse_accepts_fractions_and_integers() {
        assert_eq!(parse_rational("6/4").unwrap(), rat(3, 2));
        assert_eq!(parse_rational("-7").unwrap(), int(-7));
        assert_eq!(parse_rational(" 1/20 ").unwrap(), rat(1, 20));
    }

    #[test]
    fn parse_rejects_decimals_and_zero_denominator() {
        for bad in ["0.5", "1/0", "", "1/-2", "a/b", "1e3", "--1"] {
            assert!(parse_rational(bad).is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn scaling_round_trip() {
        let scale = common_denominator([rat(1, 4), rat(1, 6)].iter());
        assert_eq!(scale, BigInt::from(12));
        let n = scaled_i128(&rat(5, 6), &scale).unwrap();
        assert_eq!(n, 10);
        assert_eq!(from_scaled(n, &scale), rat(5, 6));
        assert!(scaled_i128(&rat(1, 7), &scale).is_err());
    }
}
