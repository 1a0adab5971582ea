//! Exact arithmetic in cyclotomic fields `Q(zeta_n)`.
//!
//! An element is stored in the power basis of `Q(zeta_n)` reduced modulo the `n`-th
//! cyclotomic polynomial. Mixed conductors are lifted to their least common multiple.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use once_cell::sync::Lazy;
use parking_lot::Mutex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::{JsonEntry, Matrix};
use crate::poly::Poly;
use crate::scalar::{fmt_rat, parse_rat, Field, Rat, Ring};

static PHI: Lazy<Mutex<HashMap<u64, Arc<Vec<Rat>>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Coefficients of the `n`-th cyclotomic polynomial, constant term first.
pub fn cyclotomic_polynomial(n: u64) -> Arc<Vec<Rat>> {
    assert!(n >= 1);
    if let Some(p) = PHI.lock().get(&n) {
        return p.clone();
    }
    let mut num = vec![BigRational::zero(); n as usize + 1];
    num[0] = -BigRational::one();
    num[n as usize] = BigRational::one();
    let mut p = Poly::new(num);
    for d in 1..n {
        if n % d == 0 {
            let phi_d = Poly::new(cyclotomic_polynomial(d).to_vec());
            p = p.divrem(&phi_d).0;
        }
    }
    let coeffs = Arc::new(p.coeffs().to_vec());
    PHI.lock().insert(n, coeffs.clone());
    coeffs
}

pub fn euler_phi(n: u64) -> usize {
    cyclotomic_polynomial(n).len() - 1
}

#[derive(Clone)]
pub struct Cyclotomic {
    n: u64,
    c: Vec<Rat>,
}

fn reduce(mut p: Vec<Rat>, n: u64) -> Vec<Rat> {
    let phi = cyclotomic_polynomial(n);
    let d = phi.len() - 1;
    while p.len() > d {
        let top = p.pop().unwrap();
        if top.is_zero() {
            continue;
        }
        let k = p.len() - d;
        for (i, c) in phi.iter().take(d).enumerate() {
            p[k + i] = &p[k + i] - &top * c;
        }
    }
    p.resize(d, BigRational::zero());
    p
}

impl Cyclotomic {
    pub fn from_rat(q: Rat) -> Self {
        Cyclotomic { n: 1, c: vec![q] }
    }

    pub fn from_i64(v: i64) -> Self {
        Self::from_rat(BigRational::from_integer(BigInt::from(v)))
    }

    /// `sum_k coeffs[k] * zeta_n^k`, any number of coefficients.
    pub fn from_powers(n: u64, coeffs: &[Rat]) -> Self {
        assert!(n >= 1);
        let mut p = vec![BigRational::zero(); n as usize];
        for (k, c) in coeffs.iter().enumerate() {
            let i = k % n as usize;
            p[i] = &p[i] + c;
        }
        Cyclotomic { n, c: reduce(p, n) }
    }

    /// `zeta_n^k` for any integer `k`.
    pub fn root_of_unity(n: u64, k: i64) -> Self {
        let k = k.rem_euclid(n as i64) as usize;
        let mut p = vec![BigRational::zero(); k + 1];
        p[k] = BigRational::one();
        Cyclotomic {
            n,
            c: reduce(p, n),
        }
    }

    /// `exp(2 pi i q)` for rational `q`.
    pub fn exp_2pi_i(q: &Rat) -> Self {
        let d = q.denom().to_u64().expect("denominator fits in u64");
        let k = q.numer().mod_floor(q.denom()).to_i64().expect("fits");
        Self::root_of_unity(d, k)
    }

    pub fn conductor(&self) -> u64 {
        self.n
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.c
    }

    /// Re-express in `Q(zeta_m)` for a multiple `m` of the conductor.
    pub fn lift(&self, m: u64) -> Self {
        assert!(m % self.n == 0, "lift target must be a multiple");
        if m == self.n {
            return self.clone();
        }
        let step = (m / self.n) as usize;
        let mut p = vec![BigRational::zero(); (self.c.len().max(1) - 1) * step + 1];
        for (k, c) in self.c.iter().enumerate() {
            p[k * step] = c.clone();
        }
        Cyclotomic { n: m, c: reduce(p, m) }
    }

    fn aligned(&self, o: &Self) -> (Self, Self, u64) {
        let l = self.n.lcm(&o.n);
        (self.lift(l), o.lift(l), l)
    }

    pub fn as_rational(&self) -> Option<Rat> {
        if self.c.iter().skip(1).all(|x| x.is_zero()) {
            Some(self.c.first().cloned().unwrap_or_else(BigRational::zero))
        } else {
            None
        }
    }

    /// Complex conjugation `zeta -> zeta^{-1}`.
    pub fn conj(&self) -> Self {
        let n = self.n as usize;
        let mut p = vec![BigRational::zero(); n];
        for (k, c) in self.c.iter().enumerate() {
            let j = (n - k) % n;
            p[j] = &p[j] + c;
        }
        Cyclotomic {
            n: self.n,
            c: reduce(p, self.n),
        }
    }

    /// Rewrites in the smallest conductor dividing the current one that contains the element.
    pub fn normalized(&self) -> Self {
        let mut best = self.clone();
        let mut divisors: Vec<u64> = (1..=self.n).filter(|d| self.n % d == 0).collect();
        divisors.sort();
        for d in divisors {
            if d == self.n {
                break;
            }
            // Candidate: solve in the smaller field by comparing lifted basis expansions.
            let phi_d = euler_phi(d);
            let basis: Vec<Vec<Rat>> = (0..phi_d)
                .map(|k| Self::root_of_unity(d, k as i64).lift(self.n).c)
                .collect();
            let a = Matrix::from_cols(self.c.len(), &basis).expect("lengths");
            if let Some(x) = a.solve(&self.c) {
                best = Cyclotomic { n: d, c: x };
                break;
            }
        }
        best
    }

    /// If this is a root of unity `zeta_m^k` with `m | bound`, returns `(m, k)` with the
    /// smallest such `m`.
    pub fn as_root_of_unity(&self, bound: u64) -> Option<(u64, u64)> {
        let l = self.n.lcm(&2);
        for m in 1..=bound.max(l) {
            for k in 0..m {
                if k.gcd(&m) != 1 && !(m == 1 && k == 0) {
                    continue;
                }
                if *self == Self::root_of_unity(m, k as i64) {
                    return Some((m, k));
                }
            }
        }
        None
    }
}

impl PartialEq for Cyclotomic {
    fn eq(&self, other: &Self) -> bool {
        if self.n == other.n {
            return self.c == other.c;
        }
        let (a, b, _) = self.aligned(other);
        a.c == b.c
    }
}

impl Add for Cyclotomic {
    type Output = Cyclotomic;
    fn add(self, o: Self) -> Self {
        let (a, b, n) = self.aligned(&o);
        Cyclotomic {
            n,
            c: a.c.iter().zip(&b.c).map(|(x, y)| x + y).collect(),
        }
    }
}

impl Sub for Cyclotomic {
    type Output = Cyclotomic;
    fn sub(self, o: Self) -> Self {
        let (a, b, n) = self.aligned(&o);
        Cyclotomic {
            n,
            c: a.c.iter().zip(&b.c).map(|(x, y)| x - y).collect(),
        }
    }
}

impl Neg for Cyclotomic {
    type Output = Cyclotomic;
    fn neg(self) -> Self {
        Cyclotomic {
            n: self.n,
            c: self.c.iter().map(|x| -x).collect(),
        }
    }
}

impl Mul for Cyclotomic {
    type Output = Cyclotomic;
    fn mul(self, o: Self) -> Self {
        if self.n == 1 {
            return Cyclotomic {
                n: o.n,
                c: o.c.iter().map(|x| x * &self.c[0]).collect(),
            };
        }
        if o.n == 1 {
            return Cyclotomic {
                n: self.n,
                c: self.c.iter().map(|x| x * &o.c[0]).collect(),
            };
        }
        let (a, b, n) = self.aligned(&o);
        let mut p = vec![BigRational::zero(); a.c.len() + b.c.len()];
        for (i, x) in a.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.c.iter().enumerate() {
                p[i + j] = &p[i + j] + x * y;
            }
        }
        Cyclotomic { n, c: reduce(p, n) }
    }
}

impl Ring for Cyclotomic {
    fn zero() -> Self {
        Self::from_rat(BigRational::zero())
    }
    fn one() -> Self {
        Self::from_rat(BigRational::one())
    }
    fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }
    fn from_i64(v: i64) -> Self {
        Cyclotomic::from_i64(v)
    }
}

impl Field for Cyclotomic {
    fn inv(&self) -> Option<Self> {
        if Ring::is_zero(self) {
            return None;
        }
        if let Some(q) = self.as_rational() {
            return Some(Self::from_rat(q.recip()));
        }
        let a = Poly::new(self.c.clone());
        let phi = Poly::new(cyclotomic_polynomial(self.n).to_vec());
        let (g, u, _) = a.ext_gcd(&phi);
        debug_assert_eq!(g.degree(), Some(0));
        Some(Cyclotomic {
            n: self.n,
            c: reduce(u.coeffs().to_vec(), self.n),
        })
    }
}

impl fmt::Debug for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// GAP-style notation: `E(n)` is `exp(2 pi i / n)`.
impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = self.normalized();
        let mut terms = Vec::new();
        for (k, c) in x.c.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let root = match k {
                0 => String::new(),
                1 => format!("E({})", x.n),
                _ => format!("E({})^{k}", x.n),
            };
            let coeff = if root.is_empty() {
                fmt_rat(c)
            } else if c.is_one() {
                String::new()
            } else if *c == -BigRational::one() {
                "-".to_string()
            } else {
                format!("{}*", fmt_rat(c))
            };
            terms.push(format!("{coeff}{root}"));
        }
        if terms.is_empty() {
            return write!(f, "0");
        }
        let mut s = terms[0].clone();
        for t in &terms[1..] {
            if let Some(rest) = t.strip_prefix('-') {
                s.push_str(" - ");
                s.push_str(rest);
            } else {
                s.push_str(" + ");
                s.push_str(t);
            }
        }
        write!(f, "{s}")
    }
}

impl std::str::FromStr for Cyclotomic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("not a cyclotomic number: {s:?}"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad());
        }
        let mut terms: Vec<(bool, String)> = Vec::new();
        let mut cur = String::new();
        let mut neg = false;
        let mut depth = 0;
        for (i, ch) in compact.chars().enumerate() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            if (ch == '+' || ch == '-') && depth == 0 && i > 0 && !cur.ends_with('^') && !cur.ends_with('/') {
                terms.push((neg, std::mem::take(&mut cur)));
                neg = ch == '-';
                continue;
            }
            if (ch == '+' || ch == '-') && i == 0 {
                neg = ch == '-';
                continue;
            }
            cur.push(ch);
        }
        terms.push((neg, cur));
        let mut acc = Cyclotomic::zero();
        for (neg, t) in terms {
            if t.is_empty() {
                return Err(bad());
            }
            let (coef, root) = match t.find("E(") {
                None => (parse_rat(&t)?, None),
                Some(pos) => {
                    let coef = match t[..pos].strip_suffix('*') {
                        Some(c) => parse_rat(c)?,
                        None if pos == 0 => BigRational::one(),
                        None => return Err(bad()),
                    };
                    (coef, Some(&t[pos..]))
                }
            };
            let mut term = Cyclotomic::from_rat(coef);
            if let Some(r) = root {
                let close = r.find(')').ok_or_else(bad)?;
                let n: u64 = r[2..close].parse().map_err(|_| bad())?;
                let k: i64 = match r[close + 1..].strip_prefix('^') {
                    Some(e) => e.parse().map_err(|_| bad())?,
                    None if close + 1 == r.len() => 1,
                    None => return Err(bad()),
                };
                if n == 0 {
                    return Err(bad());
                }
                term = term * Cyclotomic::root_of_unity(n, k);
            }
            acc = if neg { acc - term } else { acc + term };
        }
        Ok(acc)
    }
}

impl Serialize for Cyclotomic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cyclotomic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = serde_json::Value::deserialize(d)?;
        Self::from_json(&v).map_err(D::Error::custom)
    }
}

impl JsonEntry for Cyclotomic {
    fn to_json(&self) -> serde_json::Value {
        match self.as_rational() {
            Some(q) => crate::scalar::serde_exact::rat_to_json(&q),
            None => serde_json::Value::from(self.to_string()),
        }
    }
    fn from_json(v: &serde_json::Value) -> std::result::Result<Self, String> {
        match v {
            serde_json::Value::String(s) => s.parse().map_err(|e: Error| e.to_string()),
            other => Rat::from_json(other).map(Cyclotomic::from_rat),
        }
    }
}

pub type CycloMatrix = Matrix<Cyclotomic>;

impl Matrix<Cyclotomic> {
    pub fn from_rat_matrix(m: &Matrix<Rat>) -> Self {
        m.map(|q| Cyclotomic::from_rat(q.clone()))
    }

    pub fn from_int_matrix(m: &Matrix<BigInt>) -> Self {
        m.map(|q| Cyclotomic::from_rat(BigRational::from_integer(q.clone())))
    }

    pub fn conj(&self) -> Self {
        self.map(|x| x.conj())
    }

    /// Diagonal matrix `exp(2 pi i v_k)`.
    pub fn exp_diag(v: &[Rat]) -> Self {
        Matrix::diag(&v.iter().map(Cyclotomic::exp_2pi_i).collect::<Vec<_>>())
    }

    /// Rational matrix when every entry is rational.
    pub fn to_rat(&self) -> Option<Matrix<Rat>> {
        let rows: Option<Vec<Vec<Rat>>> = self
            .to_rows()
            .iter()
            .map(|r| r.iter().map(|x| x.as_rational()).collect())
            .collect();
        rows.map(|r| Matrix::from_rows(r).expect("rectangular"))
    }

    /// Smallest `k <= bound` with `self^k = 1`.
    pub fn multiplicative_order(&self, bound: u64) -> Option<u64> {
        let mut p = self.clone();
        for k in 1..=bound {
            if p.is_identity() {
                return Some(k);
            }
            p = &p * self;
        }
        None
    }
}

/// Sign of a nonzero rational.
pub fn sign_of(q: &Rat) -> i32 {
    if q.is_positive() {
        1
    } else if q.is_negative() {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn cyclotomic_polynomials() {
        let p = |n| {
            cyclotomic_polynomial(n)
                .iter()
                .map(|q| q.to_integer().to_i64().unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(p(1), vec![-1, 1]);
        assert_eq!(p(4), vec![1, 0, 1]);
        assert_eq!(p(6), vec![1, -1, 1]);
        assert_eq!(p(12), vec![1, 0, -1, 0, 1]);
        assert_eq!(euler_phi(8), 4);
    }

    #[test]
    fn i_squared_is_minus_one() {
        let i = Cyclotomic::root_of_unity(4, 1);
        assert_eq!(i.clone() * i.clone(), Cyclotomic::from_i64(-1));
        assert_eq!(i.inv().unwrap(), -i.clone());
        assert_eq!(i.conj(), -i);
    }

    #[test]
    fn mixed_conductors() {
        let w = Cyclotomic::root_of_unity(3, 1);
        let i = Cyclotomic::root_of_unity(4, 1);
        let z12 = Cyclotomic::root_of_unity(12, 7);
        assert_eq!(w * i, z12);
        let one_plus = Cyclotomic::root_of_unity(3, 1) + Cyclotomic::root_of_unity(3, 2);
        assert_eq!(one_plus, Cyclotomic::from_i64(-1));
    }

    #[test]
    fn inverse_in_q_zeta5() {
        let x = Cyclotomic::from_powers(5, &[rat(2, 1), rat(-1, 3), rat(0, 1), rat(5, 2)]);
        assert_eq!(x.clone() * x.inv().unwrap(), Cyclotomic::one());
    }

    #[test]
    fn exp_of_rationals() {
        assert_eq!(Cyclotomic::exp_2pi_i(&rat(-1, 4)), -Cyclotomic::root_of_unity(4, 1));
        assert_eq!(Cyclotomic::exp_2pi_i(&rat(1, 2)), Cyclotomic::from_i64(-1));
        assert_eq!(Cyclotomic::exp_2pi_i(&rat(3, 1)), Cyclotomic::one());
    }

    #[test]
    fn display_and_parse() {
        let x = -Cyclotomic::root_of_unity(4, 1) + Cyclotomic::from_rat(rat(1, 2));
        let s = x.to_string();
        assert_eq!(s, "1/2 - E(4)");
        assert_eq!(s.parse::<Cyclotomic>().unwrap(), x);
        assert_eq!("-E(8)^3".parse::<Cyclotomic>().unwrap(), -Cyclotomic::root_of_unity(8, 3));
        assert!("E(".parse::<Cyclotomic>().is_err());
    }

    #[test]
    fn normalizes_to_smallest_field() {
        let x = Cyclotomic::root_of_unity(12, 3);
        assert_eq!(x.normalized().conductor(), 4);
        assert_eq!(Cyclotomic::root_of_unity(6, 3).normalized().conductor(), 1);
    }

    #[test]
    fn detects_roots_of_unity() {
        assert_eq!(Cyclotomic::root_of_unity(12, 5).as_root_of_unity(24), Some((12, 5)));
        assert_eq!(Cyclotomic::from_i64(2).as_root_of_unity(24), None);
    }
}
