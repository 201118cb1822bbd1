//! Exact rational scalars and their text form.
//!
//! Rationals are written as `num/den` with the denominator omitted when it is
//! one. Decimal literals are rejected so that every input stays exact.

use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.contains(['.', 'e', 'E']) {
        return Err(Error::Parse(format!(
            "`{t}` is not an exact rational; write it as p/q"
        )));
    }
    Rational::from_str(t).map_err(|e| Error::Parse(format!("`{t}`: {e}")))
}

pub fn format_rational(q: &Rational) -> String {
    q.to_string()
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `a (a+1) ... (a+k-1)`, the exact form of `Γ(a+k)/Γ(a)`.
pub fn rising(a: &Rational, k: u32) -> Rational {
    let mut acc = Rational::one();
    let mut term = a.clone();
    for _ in 0..k {
        acc *= &term;
        term += Rational::one();
    }
    acc
}

pub fn is_positive(q: &Rational) -> bool {
    q.is_positive()
}

pub fn is_zero(q: &Rational) -> bool {
    q.is_zero()
}

/// Serde adapter storing a rational as its `num/den` string.
pub mod serde_str {
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

/// Serde adapter for string-keyed maps of rationals.
pub mod serde_map {
    use std::collections::BTreeMap;

    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<String, Rational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, v)| (k, format_rational(v))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<String, Rational>, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                parse_rational(&v)
                    .map(|q| (k, q))
                    .map_err(serde::de::Error::custom)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("-6/4").unwrap(), ratio(-3, 2));
        assert_eq!(parse_rational(" 7 ").unwrap(), int(7));
        assert_eq!(format_rational(&ratio(4, 2)), "2");
        assert_eq!(format_rational(&ratio(-1, 3)), "-1/3");
    }

    #[test]
    fn rejects_decimals_and_zero_denominators() {
        assert!(parse_rational("0.5").is_err());
        assert!(parse_rational("1e3").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn rising_factorial() {
        assert_eq!(rising(&int(2), 2), int(6));
        assert_eq!(rising(&ratio(1, 2), 3), ratio(15, 8));
        assert_eq!(rising(&int(5), 0), int(1));
    }
}
