//! Exact scalar types and the small algebraic traits the matrix layer is generic over.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Int = BigInt;
pub type Rat = BigRational;

/// Commutative ring with unit, exact equality.
pub trait Ring:
    Clone
    + PartialEq
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_i64(v: i64) -> Self;

    fn is_one(&self) -> bool {
        *self == Self::one()
    }
}

/// A ring in which every nonzero element is invertible.
pub trait Field: Ring {
    fn inv(&self) -> Option<Self>;

    fn div(&self, other: &Self) -> Option<Self> {
        other.inv().map(|i| self.clone() * i)
    }
}

impl Ring for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
}

impl Ring for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

impl Field for BigRational {
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
}

pub fn int(v: i64) -> Int {
    BigInt::from(v)
}

pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_from_int(v: &Int) -> Rat {
    BigRational::from_integer(v.clone())
}

pub fn is_integral(q: &Rat) -> bool {
    One::is_one(q.denom())
}

/// Parses `"3"`, `"-1/2"` and the like.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if Zero::is_zero(&d) {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn fmt_rat(q: &Rat) -> String {
    if One::is_one(q.denom()) {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Fractional part in `[0, 1)`.
pub fn frac(q: &Rat) -> Rat {
    q - q.floor()
}

/// Least common multiple of the denominators of a list of rationals.
pub fn common_denominator<'a>(qs: impl IntoIterator<Item = &'a Rat>) -> Int {
    qs.into_iter()
        .fold(<BigInt as One>::one(), |acc, q| acc.lcm(q.denom()))
}

pub fn int_to_i64(v: &Int) -> Option<i64> {
    v.to_i64()
}

pub fn abs_int(v: &Int) -> Int {
    v.abs()
}

/// Serde helpers: integers as JSON numbers when they fit, rationals as `"p/q"` strings.
pub mod serde_exact {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Num {
        I(i64),
        S(String),
    }

    pub fn int_to_json(v: &Int) -> serde_json::Value {
        match v.to_i64() {
            Some(i) => serde_json::Value::from(i),
            None => serde_json::Value::from(v.to_string()),
        }
    }

    pub fn rat_to_json(q: &Rat) -> serde_json::Value {
        if One::is_one(q.denom()) {
            int_to_json(q.numer())
        } else {
            serde_json::Value::from(fmt_rat(q))
        }
    }

    fn num_to_rat(n: Num) -> std::result::Result<Rat, String> {
        match n {
            Num::I(i) => Ok(BigRational::from_integer(BigInt::from(i))),
            Num::S(s) => parse_rat(&s).map_err(|e| e.to_string()),
        }
    }

    fn num_to_int(n: Num) -> std::result::Result<Int, String> {
        let q = num_to_rat(n)?;
        if One::is_one(q.denom()) {
            Ok(q.numer().clone())
        } else {
            Err(format!("expected an integer, got {}", fmt_rat(&q)))
        }
    }

    pub mod int {
        use super::*;
        pub fn serialize<S: Serializer>(v: &Int, s: S) -> std::result::Result<S::Ok, S::Error> {
            int_to_json(v).serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Int, D::Error> {
            num_to_int(Num::deserialize(d)?).map_err(D::Error::custom)
        }
    }

    pub mod rat {
        use super::*;
        pub fn serialize<S: Serializer>(v: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
            rat_to_json(v).serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
            num_to_rat(Num::deserialize(d)?).map_err(D::Error::custom)
        }
    }

    pub mod int_vec {
        use super::*;
        pub fn serialize<S: Serializer>(v: &[Int], s: S) -> std::result::Result<S::Ok, S::Error> {
            v.iter().map(int_to_json).collect::<Vec<_>>().serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Int>, D::Error> {
            Vec::<Num>::deserialize(d)?
                .into_iter()
                .map(|n| num_to_int(n).map_err(D::Error::custom))
                .collect()
        }
    }

    pub mod rat_vec {
        use super::*;
        pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> std::result::Result<S::Ok, S::Error> {
            v.iter().map(rat_to_json).collect::<Vec<_>>().serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Rat>, D::Error> {
            Vec::<Num>::deserialize(d)?
                .into_iter()
                .map(|n| num_to_rat(n).map_err(D::Error::custom))
                .collect()
        }
    }

    pub mod rat_vecs {
        use super::*;
        pub fn serialize<S: Serializer>(
            v: &[Vec<Rat>],
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            v.iter()
                .map(|r| r.iter().map(rat_to_json).collect::<Vec<_>>())
                .collect::<Vec<_>>()
                .serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Vec<Rat>>, D::Error> {
            Vec::<Vec<Num>>::deserialize(d)?
                .into_iter()
                .map(|r| {
                    r.into_iter()
                        .map(|n| num_to_rat(n).map_err(D::Error::custom))
                        .collect()
                })
                .collect()
        }
    }
}
