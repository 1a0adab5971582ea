//! Univariate polynomials over an exact field.

use crate::matrix::Matrix;
use crate::scalar::Field;

/// Coefficients from the constant term up; never has a trailing zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<F> {
    coeffs: Vec<F>,
}

impl<F: Field> Poly<F> {
    pub fn new(mut coeffs: Vec<F>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::new(vec![F::one()])
    }

    pub fn x() -> Self {
        Poly::new(vec![F::zero(), F::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    pub fn lead(&self) -> Option<&F> {
        self.coeffs.last()
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new(
            (0..n)
                .map(|i| self.get(i) + o.get(i))
                .collect(),
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new(
            (0..n)
                .map(|i| self.get(i) - o.get(i))
                .collect(),
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut out = vec![F::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, c: &F) -> Self {
        Poly::new(self.coeffs.iter().map(|x| x.clone() * c.clone()).collect())
    }

    fn get(&self, i: usize) -> F {
        self.coeffs.get(i).cloned().unwrap_or_else(F::zero)
    }

    /// Quotient and remainder. Panics on division by zero.
    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let inv = d.lead().unwrap().inv().expect("nonzero leading coefficient");
        let mut r = self.coeffs.clone();
        let mut q = vec![F::zero(); self.coeffs.len().saturating_sub(dd).max(1)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1 - dd;
            let c = r.last().unwrap().clone() * inv.clone();
            for (i, dc) in d.coeffs.iter().enumerate() {
                r[k + i] = r[k + i].clone() - c.clone() * dc.clone();
            }
            q[k] = c;
            r.pop();
            while r.last().is_some_and(|x| x.is_zero()) {
                r.pop();
            }
        }
        (Poly::new(q), Poly::new(r))
    }

    pub fn monic(&self) -> Self {
        match self.lead() {
            None => Self::zero(),
            Some(l) => self.scale(&l.inv().unwrap()),
        }
    }

    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `(g, u, v)` with `u*self + v*o = g`, `g` monic.
    pub fn ext_gcd(&self, o: &Self) -> (Self, Self, Self) {
        let (mut r0, mut r1) = (self.clone(), o.clone());
        let (mut s0, mut s1) = (Self::one(), Self::zero());
        let (mut t0, mut t1) = (Self::zero(), Self::one());
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1);
            r0 = std::mem::replace(&mut r1, r);
            let s = s0.sub(&q.mul(&s1));
            s0 = std::mem::replace(&mut s1, s);
            let t = t0.sub(&q.mul(&t1));
            t0 = std::mem::replace(&mut t1, t);
        }
        match r0.lead().cloned() {
            None => (r0, s0, t0),
            Some(l) => {
                let li = l.inv().unwrap();
                (r0.scale(&li), s0.scale(&li), t0.scale(&li))
            }
        }
    }

    pub fn derivative(&self) -> Self {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| F::from_i64(i as i64) * c.clone())
                .collect(),
        )
    }

    /// Squarefree in characteristic zero: coprime to the derivative.
    pub fn is_squarefree(&self) -> bool {
        self.gcd(&self.derivative()).degree() == Some(0)
    }

    pub fn eval(&self, x: &F) -> F {
        self.coeffs
            .iter()
            .rev()
            .fold(F::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn eval_matrix(&self, m: &Matrix<F>) -> Matrix<F> {
        let n = m.rows();
        let mut acc = Matrix::zeros(n, n);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * m) + &Matrix::identity(n).scale(c);
        }
        acc
    }
}

/// Minimal polynomial of a square matrix, found as the first linear dependency among
/// its powers.
pub fn minimal_polynomial<F: Field>(m: &Matrix<F>) -> Poly<F> {
    assert!(m.is_square());
    let n = m.rows();
    let mut powers: Vec<Vec<F>> = vec![Matrix::<F>::identity(n).flatten()];
    let mut cur = Matrix::identity(n);
    loop {
        cur = &cur * m;
        let v = cur.flatten();
        let a = Matrix::from_cols(n * n, &powers).expect("equal lengths");
        if let Some(x) = a.solve(&v) {
            let mut c: Vec<F> = x.into_iter().map(|t| -t).collect();
            c.push(F::one());
            return Poly::new(c);
        }
        powers.push(v);
    }
}

/// Minimal polynomial as the least common multiple of the annihilators of the standard
/// basis vectors, each found from its Krylov sequence. Vectors already killed by the
/// running product are skipped.
pub fn minimal_polynomial_krylov<F: Field>(m: &Matrix<F>) -> Poly<F> {
    assert!(m.is_square());
    let n = m.rows();
    let mut acc = Poly::one();
    for i in 0..n {
        let mut e = vec![F::zero(); n];
        e[i] = F::one();
        if apply_poly(&acc, m, &e).iter().all(|x| x.is_zero()) {
            continue;
        }
        let p = vector_annihilator(m, &e);
        let g = acc.gcd(&p);
        acc = acc.mul(&p).divrem(&g).0.monic();
    }
    acc
}

/// `p(m) v` by Horner's rule on vectors.
pub fn apply_poly<F: Field>(p: &Poly<F>, m: &Matrix<F>, v: &[F]) -> Vec<F> {
    let mut acc = vec![F::zero(); v.len()];
    for c in p.coeffs().iter().rev() {
        acc = m.mul_vec(&acc);
        for (a, x) in acc.iter_mut().zip(v) {
            *a = a.clone() + c.clone() * x.clone();
        }
    }
    acc
}

/// Monic polynomial of least degree with `p(m) v = 0`, by incremental elimination on
/// the Krylov sequence. Each reduced vector carries the polynomial that produces it.
pub fn vector_annihilator<F: Field>(m: &Matrix<F>, v: &[F]) -> Poly<F> {
    let mut reduced: Vec<(usize, Vec<F>, Vec<F>)> = Vec::new();
    let mut power = v.to_vec();
    for k in 0.. {
        let mut w = power.clone();
        let mut c = vec![F::zero(); k + 1];
        c[k] = F::one();
        for (p, rw, rc) in &reduced {
            if w[*p].is_zero() {
                continue;
            }
            let f = w[*p].clone();
            for (a, b) in w.iter_mut().zip(rw) {
                if !b.is_zero() {
                    *a = a.clone() - f.clone() * b.clone();
                }
            }
            for (a, b) in c.iter_mut().zip(rc) {
                if !b.is_zero() {
                    *a = a.clone() - f.clone() * b.clone();
                }
            }
        }
        match w.iter().position(|x| !x.is_zero()) {
            None => return Poly::new(c),
            Some(p) => {
                let inv = w[p].inv().expect("nonzero pivot");
                let w: Vec<F> = w.into_iter().map(|x| x * inv.clone()).collect();
                let c: Vec<F> = c.into_iter().map(|x| x * inv.clone()).collect();
                reduced.push((p, w, c));
            }
        }
        power = m.mul_vec(&power);
    }
    unreachable!("the Krylov sequence becomes dependent within n steps")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::RatMatrix;
    use crate::scalar::{rat, Rat};

    fn p(c: &[i64]) -> Poly<Rat> {
        Poly::new(c.iter().map(|&x| rat(x, 1)).collect())
    }

    #[test]
    fn gcd_of_products() {
        let a = p(&[-1, 0, 1]);
        let b = p(&[1, 2, 1]);
        assert_eq!(a.gcd(&b), p(&[1, 1]));
        let (g, u, v) = a.ext_gcd(&b);
        assert_eq!(u.mul(&a).add(&v.mul(&b)), g);
    }

    #[test]
    fn squarefree_detection() {
        assert!(p(&[-1, 0, 1]).is_squarefree());
        assert!(!p(&[1, -2, 1]).is_squarefree());
    }

    #[test]
    fn minimal_polynomial_of_jordan_block() {
        let j = RatMatrix::from_i64(&[&[1, 1], &[0, 1]]);
        assert_eq!(minimal_polynomial(&j), p(&[1, -2, 1]));
        let d = RatMatrix::from_i64(&[&[1, 0], &[0, -1]]);
        assert_eq!(minimal_polynomial(&d), p(&[-1, 0, 1]));
        for m in [j, d, RatMatrix::from_i64(&[&[2, 0, 0], &[0, 2, 0], &[0, 0, 3]])] {
            assert_eq!(minimal_polynomial_krylov(&m), minimal_polynomial(&m));
        }
    }
}
