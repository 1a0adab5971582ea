//! Brute-force oracles over small prime fields. Everything here uses its own modular
//! arithmetic; only the field wrapper [`Fp`] implements the library's scalar traits so
//! that library routines can be run on the same points. The [`fixtures`] module builds
//! matched parameter spaces from the library itself.

pub mod certify;
pub mod fixtures;

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use twendo_core::scalar::{Field, Ring};

/// An element of the prime field with `P` elements.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp<const P: u64>(pub u64);

impl<const P: u64> Fp<P> {
    pub fn new(v: i64) -> Self {
        Fp(v.rem_euclid(P as i64) as u64)
    }
}

impl<const P: u64> fmt::Debug for Fp<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<const P: u64> Add for Fp<P> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Fp((self.0 + o.0) % P)
    }
}

impl<const P: u64> Sub for Fp<P> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Fp((self.0 + P - o.0) % P)
    }
}

impl<const P: u64> Mul for Fp<P> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Fp(self.0 * o.0 % P)
    }
}

impl<const P: u64> Neg for Fp<P> {
    type Output = Self;
    fn neg(self) -> Self {
        Fp((P - self.0) % P)
    }
}

impl<const P: u64> Ring for Fp<P> {
    fn zero() -> Self {
        Fp(0)
    }
    fn one() -> Self {
        Fp(1 % P)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
    fn from_i64(v: i64) -> Self {
        Fp::new(v)
    }
}

impl<const P: u64> Field for Fp<P> {
    fn inv(&self) -> Option<Self> {
        (self.0 != 0).then(|| Fp(pow_mod(self.0, P - 2, P)))
    }
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// A vector over `F_q`, entries in `0..q`.
pub type Vector = Vec<u64>;

/// Reduced row echelon form of the span of `vectors`, as a list of rows.
pub fn rref(vectors: &[Vector], q: u64) -> Vec<Vector> {
    let mut rows: Vec<Vector> = vectors.to_vec();
    let n = rows.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..n {
        let Some(piv) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, piv);
        let inv = pow_mod(rows[r][c], q - 2, q);
        for x in rows[r].iter_mut() {
            *x = *x * inv % q;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0 {
                let f = rows[i][c];
                for k in 0..n {
                    rows[i][k] = (rows[i][k] + q * q - f * rows[r][k]) % q;
                }
            }
        }
        r += 1;
    }
    rows.truncate(r);
    rows
}

pub fn rank(vectors: &[Vector], q: u64) -> usize {
    rref(vectors, q).len()
}

/// A complete flag, stored by the basis `v_1, ..., v_n` with `F_i = span(v_1..v_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flag {
    pub basis: Vec<Vector>,
}

impl Flag {
    /// Canonical key: the echelon forms of all the subspaces.
    pub fn key(&self, q: u64) -> Vec<Vec<Vector>> {
        (1..=self.basis.len()).map(|i| rref(&self.basis[..i], q)).collect()
    }

    /// The flag `g F`, with `g` given by rows.
    pub fn translate(&self, g: &[Vector], q: u64) -> Flag {
        let basis = self
            .basis
            .iter()
            .map(|v| g.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum::<u64>() % q).collect())
            .collect();
        Flag { basis }
    }

    /// Entry `(row, col)` of the matrix whose columns are the basis vectors.
    pub fn entry(&self, row: usize, col: usize) -> u64 {
        self.basis[col][row]
    }
}

fn all_vectors(n: usize, q: u64) -> Vec<Vector> {
    let total = q.pow(n as u32);
    (0..total)
        .map(|mut x| {
            (0..n)
                .map(|_| {
                    let d = x % q;
                    x /= q;
                    d
                })
                .collect()
        })
        .collect()
}

/// All complete flags of `F_q^n`, one representative basis each.
pub fn all_flags(n: usize, q: u64) -> Vec<Flag> {
    let vectors = all_vectors(n, q);
    let mut level: Vec<Flag> = vec![Flag { basis: Vec::new() }];
    for i in 0..n {
        let mut next = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for f in &level {
            for v in &vectors {
                let mut b = f.basis.clone();
                b.push(v.clone());
                if rank(&b, q) != i + 1 {
                    continue;
                }
                let flag = Flag { basis: b };
                if seen.insert(flag.key(q)) {
                    next.push(flag);
                }
            }
        }
        level = next;
    }
    level
}

/// Number of complete flags of `F_q^n`, the `q`-factorial.
pub fn flag_count(n: usize, q: u64) -> u64 {
    (1..=n as u32).map(|k| (q.pow(k) - 1) / (q - 1)).product()
}

/// `|GL_n(F_q)|`.
pub fn gl_order(n: usize, q: u64) -> u64 {
    (0..n as u32).map(|k| q.pow(n as u32) - q.pow(k)).product()
}

fn primitive_root(q: u64) -> u64 {
    (1..q)
        .find(|&g| (1..q - 1).all(|e| pow_mod(g, e, q) != 1))
        .unwrap_or(1)
}

/// Generators of the block diagonal group preserving the split: transvections inside
/// each block and a primitive scalar in each coordinate.
pub fn split_group_generators(plus: &[bool], q: u64) -> Vec<Vec<Vector>> {
    let n = plus.len();
    let identity = |n: usize| -> Vec<Vector> { (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect() };
    let mut gens = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && plus[i] == plus[j] {
                let mut g = identity(n);
                g[i][j] = 1;
                gens.push(g);
            }
        }
        let mut d = identity(n);
        d[i][i] = primitive_root(q);
        gens.push(d);
    }
    gens
}

/// Orbits of a group, given by generators, on all complete flags.
#[derive(Clone, Debug)]
pub struct FlagOrbits {
    pub flags: Vec<Flag>,
    /// Orbit index of each flag.
    pub orbit_of: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl FlagOrbits {
    pub fn orbit_count(&self) -> usize {
        self.sizes.len()
    }

    /// One flag from each orbit.
    pub fn representatives(&self) -> Vec<&Flag> {
        (0..self.orbit_count())
            .map(|o| &self.flags[self.orbit_of.iter().position(|&x| x == o).expect("nonempty")])
            .collect()
    }
}

pub fn flag_orbits(n: usize, generators: &[Vec<Vector>], q: u64) -> FlagOrbits {
    let flags = all_flags(n, q);
    let index: HashMap<Vec<Vec<Vector>>, usize> = flags.iter().enumerate().map(|(i, f)| (f.key(q), i)).collect();
    let mut orbit_of = vec![usize::MAX; flags.len()];
    let mut sizes = Vec::new();
    for start in 0..flags.len() {
        if orbit_of[start] != usize::MAX {
            continue;
        }
        let o = sizes.len();
        orbit_of[start] = o;
        let mut stack = vec![start];
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            for g in generators {
                let j = index[&flags[i].translate(g, q).key(q)];
                if orbit_of[j] == usize::MAX {
                    orbit_of[j] = o;
                    stack.push(j);
                }
            }
        }
        sizes.push(size);
    }
    FlagOrbits { flags, orbit_of, sizes }
}

/// Orbits of `GL_p x GL_q` on the flags of `F_q^{p+q}` for the given split.
pub fn split_orbits(plus: &[bool], q: u64) -> FlagOrbits {
    flag_orbits(plus.len(), &split_group_generators(plus, q), q)
}

/// `|GL_p(F_q) x GL_m(F_q)|` for the split.
pub fn split_group_order(plus: &[bool], q: u64) -> u64 {
    let p = plus.iter().filter(|&&x| x).count();
    gl_order(p, q) * gl_order(plus.len() - p, q)
}

/// Shapes `(r, u)` with `|K| / |O| = (q - 1)^r q^u`: the possible split torus rank and
/// unipotent dimension of a connected stabilizer.
pub fn stabilizer_shapes(group_order: u64, orbit_size: u64, q: u64, max_dim: usize) -> Vec<(usize, usize)> {
    if group_order % orbit_size != 0 {
        return Vec::new();
    }
    let stab = group_order / orbit_size;
    let mut out = Vec::new();
    for r in 0..=max_dim {
        for u in 0..=max_dim - r {
            if (q - 1).pow(r as u32) * q.pow(u as u32) == stab {
                out.push((r, u));
            }
        }
    }
    out
}

/// Incidence data of a flag relative to a split: `dim(F_i meet V_+)`, `dim(F_i meet V_-)`
/// and `dim(F_i + pr_+(F_j))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankProfile {
    pub plus_meet: Vec<usize>,
    pub minus_meet: Vec<usize>,
    pub sum_with_projection: Vec<Vec<usize>>,
}

pub fn rank_profile(flag: &Flag, plus: &[bool], q: u64) -> RankProfile {
    let n = plus.len();
    let project = |v: &Vector, keep: bool| -> Vector { v.iter().zip(plus).map(|(x, &p)| if p == keep { *x } else { 0 }).collect() };
    let meet = |i: usize, keep: bool| -> usize {
        // dim(F_i meet V) = i - rank of the complementary projection.
        let other: Vec<Vector> = flag.basis[..i].iter().map(|v| project(v, !keep)).collect();
        i - rank(&other, q)
    };
    let plus_meet = (0..=n).map(|i| meet(i, true)).collect();
    let minus_meet = (0..=n).map(|i| meet(i, false)).collect();
    let sum_with_projection = (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| {
                    let mut vs: Vec<Vector> = flag.basis[..i].to_vec();
                    vs.extend(flag.basis[..j].iter().map(|v| project(v, true)));
                    if vs.is_empty() {
                        0
                    } else {
                        rank(&vs, q)
                    }
                })
                .collect()
        })
        .collect();
    RankProfile {
        plus_meet,
        minus_meet,
        sum_with_projection,
    }
}

/// The semicontinuity order: intersections can only grow and sums only shrink on
/// passing to the closure.
pub fn profile_leq(a: &RankProfile, b: &RankProfile) -> bool {
    a.plus_meet.iter().zip(&b.plus_meet).all(|(x, y)| x >= y)
        && a.minus_meet.iter().zip(&b.minus_meet).all(|(x, y)| x >= y)
        && a
            .sum_with_projection
            .iter()
            .flatten()
            .zip(b.sum_with_projection.iter().flatten())
            .all(|(x, y)| x <= y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_counts() {
        assert_eq!(all_flags(3, 2).len() as u64, flag_count(3, 2));
        assert_eq!(all_flags(2, 3).len(), 4);
    }

    #[test]
    fn borel_orbits_are_bruhat_cells() {
        // Upper triangular generators give one orbit per permutation.
        let n = 3;
        let q = 3;
        let mut gens = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let mut g: Vec<Vector> = (0..n).map(|a| (0..n).map(|b| u64::from(a == b)).collect()).collect();
                g[i][j] = 1;
                gens.push(g);
            }
        }
        let o = flag_orbits(n, &gens, q);
        assert_eq!(o.orbit_count(), 6);
        let mut sizes = o.sizes.clone();
        sizes.sort();
        assert_eq!(sizes, vec![1, 3, 3, 9, 9, 27]);
    }

    #[test]
    fn field_inverse() {
        for v in 1..7 {
            let x = Fp::<7>(v);
            assert_eq!(x * x.inv().unwrap(), Fp(1));
        }
    }
}
