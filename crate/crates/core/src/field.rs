//! Exact scalar arithmetic over the rationals or a prime field.
//!
//! Every scalar is stored as a [`BigRational`]. Over `F_p` the value is kept
//! as the canonical residue in `[0, p)` with denominator one, so equality and
//! hashing are structural in both modes.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Scalar = BigRational;

/// The coefficient field. `Rational` is the default.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Field {
    #[default]
    Rational,
    Prime(u64),
}

impl Field {
    pub fn prime(p: u64) -> Result<Field> {
        if p < 2 || !is_prime(p) {
            return Err(Error::Invalid(format!("{p} is not a prime")));
        }
        if p > u32::MAX as u64 {
            return Err(Error::Invalid(format!("prime {p} is too large")));
        }
        Ok(Field::Prime(p))
    }

    pub fn zero(&self) -> Scalar {
        Scalar::zero()
    }

    pub fn one(&self) -> Scalar {
        Scalar::one()
    }

    pub fn from_i64(&self, v: i64) -> Scalar {
        self.normalize(Scalar::from_integer(BigInt::from(v)))
    }

    /// Brings an arbitrary rational into canonical form for this field.
    pub fn normalize(&self, x: Scalar) -> Scalar {
        match *self {
            Field::Rational => x,
            Field::Prime(p) => {
                let p = BigInt::from(p);
                let num = x.numer().mod_floor(&p);
                let den = x.denom().mod_floor(&p);
                if den.is_zero() {
                    panic!("denominator divisible by the characteristic");
                }
                let inv = den.modpow(&(&p - 2u32), &p);
                Scalar::from_integer((num * inv).mod_floor(&p))
            }
        }
    }

    pub fn add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match *self {
            Field::Rational => a + b,
            Field::Prime(p) => {
                let s = a.numer() + b.numer();
                let p = BigInt::from(p);
                Scalar::from_integer(if s >= p { s - p } else { s })
            }
        }
    }

    pub fn sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match *self {
            Field::Rational => a - b,
            Field::Prime(p) => {
                let s = a.numer() - b.numer();
                Scalar::from_integer(if s.is_negative() { s + BigInt::from(p) } else { s })
            }
        }
    }

    pub fn mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match *self {
            Field::Rational => a * b,
            Field::Prime(p) => {
                Scalar::from_integer((a.numer() * b.numer()).mod_floor(&BigInt::from(p)))
            }
        }
    }

    pub fn neg(&self, a: &Scalar) -> Scalar {
        match *self {
            Field::Rational => -a,
            Field::Prime(p) => {
                if a.is_zero() {
                    a.clone()
                } else {
                    Scalar::from_integer(BigInt::from(p) - a.numer())
                }
            }
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: &Scalar) -> Option<Scalar> {
        if a.is_zero() {
            return None;
        }
        match *self {
            Field::Rational => Some(a.recip()),
            Field::Prime(p) => {
                let p = BigInt::from(p);
                Some(Scalar::from_integer(a.numer().modpow(&(&p - 2u32), &p)))
            }
        }
    }

    pub fn div(&self, a: &Scalar, b: &Scalar) -> Option<Scalar> {
        self.inv(b).map(|ib| self.mul(a, &ib))
    }

    /// Exact string form: `"3/2"`, `"-1"`, or a residue `"4"`.
    pub fn format(&self, a: &Scalar) -> String {
        if a.is_integer() {
            a.numer().to_string()
        } else {
            format!("{}/{}", a.numer(), a.denom())
        }
    }

    pub fn parse(&self, s: &str) -> Result<Scalar> {
        let s = s.trim();
        let value = if let Some((n, d)) = s.split_once('/') {
            let n = BigInt::from_str(n.trim())
                .map_err(|_| Error::Parse(format!("bad scalar numerator in {s:?}")))?;
            let d = BigInt::from_str(d.trim())
                .map_err(|_| Error::Parse(format!("bad scalar denominator in {s:?}")))?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            if let Field::Prime(p) = *self {
                if (&d % BigInt::from(p)).is_zero() {
                    return Err(Error::Parse(format!("denominator of {s:?} vanishes mod {p}")));
                }
            }
            Scalar::new(n, d)
        } else {
            Scalar::from_integer(
                BigInt::from_str(s).map_err(|_| Error::Parse(format!("bad scalar {s:?}")))?,
            )
        };
        Ok(self.normalize(value))
    }

    pub fn characteristic(&self) -> u64 {
        match *self {
            Field::Rational => 0,
            Field::Prime(p) => p,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Rational => write!(f, "q"),
            Field::Prime(p) => write!(f, "p:{p}"),
        }
    }
}

impl FromStr for Field {
    type Err = Error;

    /// Accepts `q` (rationals) or `p:PRIME`.
    fn from_str(s: &str) -> Result<Field> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("q") {
            return Ok(Field::Rational);
        }
        if let Some(p) = s.strip_prefix("p:") {
            let p: u64 = p
                .parse()
                .map_err(|_| Error::Parse(format!("bad prime in field {s:?}")))?;
            return Field::prime(p);
        }
        Err(Error::Parse(format!("unknown field {s:?}; expected q or p:PRIME")))
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Small-integer view of a scalar, when it has one.
pub fn as_i64(a: &Scalar) -> Option<i64> {
    if a.is_integer() {
        a.numer().to_i64()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_arithmetic() {
        let f = Field::prime(7).unwrap();
        let a = f.from_i64(5);
        let b = f.from_i64(4);
        assert_eq!(f.add(&a, &b), f.from_i64(2));
        assert_eq!(f.sub(&b, &a), f.from_i64(6));
        assert_eq!(f.mul(&a, &b), f.from_i64(6));
        assert_eq!(f.mul(&a, &f.inv(&a).unwrap()), f.one());
        assert_eq!(f.neg(&f.from_i64(-1)), f.one());
        assert_eq!(f.parse("1/2").unwrap(), f.from_i64(4));
    }

    #[test]
    fn rational_round_trip() {
        let f = Field::Rational;
        let x = f.parse("-6/4").unwrap();
        assert_eq!(f.format(&x), "-3/2");
        assert_eq!(f.parse(&f.format(&x)).unwrap(), x);
        assert!(f.parse("1/0").is_err());
    }

    #[test]
    fn field_specs() {
        assert_eq!("q".parse::<Field>().unwrap(), Field::Rational);
        assert_eq!("p:5".parse::<Field>().unwrap(), Field::Prime(5));
        assert!("p:6".parse::<Field>().is_err());
        assert!("r".parse::<Field>().is_err());
    }
}
