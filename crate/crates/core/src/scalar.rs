//! Exact rational scalars and the extended value used for unbounded costs.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational. Every time, capacity, supply and rate in the
/// crate is one of these.
pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// `base^exp` for a non-negative integer exponent.
pub fn pow(base: &Rational, exp: u32) -> Rational {
    let mut acc = one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Renders `p/q` with `q >= 1`; integers keep the `/1` suffix so the wire
/// format has exactly one shape.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `p/q` or a bare integer `p`. Decimal and exponent notation is
/// rejected so that no float ever enters the system.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not an exact rational `p/q`: {s:?}"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let is_int = |t: &str| {
        let digits = t.strip_prefix('-').unwrap_or(t);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !is_int(p) || !is_int(q) {
        return Err(bad());
    }
    let p = BigInt::from_str(p).map_err(|_| bad())?;
    let q = BigInt::from_str(q).map_err(|_| bad())?;
    if q.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(p, q))
}

/// Display-only decimal rendering with `digits` fractional digits (truncated
/// toward zero). Never parsed back.
pub fn decimal(q: &Rational, digits: usize) -> String {
    let neg = q.is_negative();
    let a = q.abs();
    let int_part = a.numer() / a.denom();
    let mut rem = a.numer() % a.denom();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push_str(&int_part.to_string());
    if digits > 0 {
        out.push('.');
        let ten = BigInt::from(10);
        for _ in 0..digits {
            rem *= &ten;
            let d = &rem / a.denom();
            rem %= a.denom();
            out.push_str(&d.to_string());
        }
    }
    out
}

pub fn to_f64_lossy(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// A rational extended by `+∞`. Arithmetic never produces `PosInfinity`; it
/// only appears as the value of an unbounded social cost or Braess ratio.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Finite(Rational),
    PosInfinity,
}

impl Scalar {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Scalar::Finite(q) => Some(q),
            Scalar::PosInfinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Scalar::PosInfinity)
    }

    pub fn decimal(&self, digits: usize) -> String {
        match self {
            Scalar::Finite(q) => decimal(q, digits),
            Scalar::PosInfinity => "inf".into(),
        }
    }
}

impl From<Rational> for Scalar {
    fn from(q: Rational) -> Self {
        Scalar::Finite(q)
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Finite(a), Scalar::Finite(b)) => a.cmp(b),
            (Scalar::Finite(_), Scalar::PosInfinity) => Ordering::Less,
            (Scalar::PosInfinity, Scalar::Finite(_)) => Ordering::Greater,
            (Scalar::PosInfinity, Scalar::PosInfinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Finite(q) => f.write_str(&format_rational(q)),
            Scalar::PosInfinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Scalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "+inf" => Ok(Scalar::PosInfinity),
            other => parse_rational(other).map(Scalar::Finite),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "rational_str")]` for `Rational` fields.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Same as [`rational_str`] for `Vec<Rational>`.
pub mod rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(format_rational).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("6/4").unwrap(), ratio(3, 2));
        assert_eq!(parse_rational("-7").unwrap(), int(-7));
        assert_eq!(format_rational(&ratio(3, 2)), "3/2");
        assert_eq!(format_rational(&int(4)), "4/1");
        assert_eq!(format_rational(&ratio(2, -4)), "-1/2");
    }

    #[test]
    fn rejects_floats() {
        for s in ["0.5", "1e3", "1/0", "", "/2", "3/", "abc"] {
            assert!(parse_rational(s).is_err(), "{s}");
        }
    }

    #[test]
    fn infinity_orders_last() {
        let a = Scalar::Finite(int(1_000_000));
        assert!(a < Scalar::PosInfinity);
        assert_eq!("inf".parse::<Scalar>().unwrap(), Scalar::PosInfinity);
        assert_eq!(Scalar::PosInfinity.to_string(), "inf");
    }

    #[test]
    fn decimal_truncates() {
        assert_eq!(decimal(&ratio(2, 3), 4), "0.6666");
        assert_eq!(decimal(&ratio(-7, 2), 2), "-3.50");
        assert_eq!(decimal(&int(5), 0), "5");
    }

    #[test]
    fn exact_cancellation() {
        let a = ratio(1, 3);
        let b = ratio(10_000_001, 7);
        assert_eq!((&a + &b) - &b, a);
    }
}
