//! Integer lattices, Smith normal form, quotient descriptors and cosets modulo mixed
//! integral and rational subgroups.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{IntMatrix, Matrix, RatMatrix};
use crate::scalar::{common_denominator, serde_exact, Int, Rat};

/// `u * m * v = d` with `u`, `v` unimodular and `d` diagonal with `d[i] | d[i+1]`.
#[derive(Clone, Debug)]
pub struct Snf {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl Snf {
    pub fn diagonal(&self) -> Vec<Int> {
        self.d.diagonal()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().take_while(|x| !x.is_zero()).count()
    }
}

fn swap_rows(m: &mut IntMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for j in 0..m.cols() {
        let t = m[(a, j)].clone();
        m[(a, j)] = m[(b, j)].clone();
        m[(b, j)] = t;
    }
}

fn swap_cols(m: &mut IntMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for i in 0..m.rows() {
        let t = m[(i, a)].clone();
        m[(i, a)] = m[(i, b)].clone();
        m[(i, b)] = t;
    }
}

/// row[dst] += q * row[src]
fn add_row(m: &mut IntMatrix, dst: usize, src: usize, q: &Int) {
    for j in 0..m.cols() {
        let t = &m[(dst, j)] + q * &m[(src, j)];
        m[(dst, j)] = t;
    }
}

/// col[dst] += q * col[src]
fn add_col(m: &mut IntMatrix, dst: usize, src: usize, q: &Int) {
    for i in 0..m.rows() {
        let t = &m[(i, dst)] + q * &m[(i, src)];
        m[(i, dst)] = t;
    }
}

pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let (r, c) = (m.rows(), m.cols());
    let mut d = m.clone();
    let mut u = IntMatrix::identity(r);
    let mut v = IntMatrix::identity(c);
    for t in 0..r.min(c) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..r {
                for j in t..c {
                    if d[(i, j)].is_zero() {
                        continue;
                    }
                    if best.map_or(true, |(bi, bj)| d[(i, j)].abs() < d[(bi, bj)].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                return Snf { u, d, v };
            };
            swap_rows(&mut d, t, bi);
            swap_rows(&mut u, t, bi);
            swap_cols(&mut d, t, bj);
            swap_cols(&mut v, t, bj);
            let mut clean = true;
            for i in t + 1..r {
                if d[(i, t)].is_zero() {
                    continue;
                }
                let q = -d[(i, t)].div_floor(&d[(t, t)]);
                add_row(&mut d, i, t, &q);
                add_row(&mut u, i, t, &q);
                clean &= d[(i, t)].is_zero();
            }
            for j in t + 1..c {
                if d[(t, j)].is_zero() {
                    continue;
                }
                let q = -d[(t, j)].div_floor(&d[(t, t)]);
                add_col(&mut d, j, t, &q);
                add_col(&mut v, j, t, &q);
                clean &= d[(t, j)].is_zero();
            }
            if !clean {
                continue;
            }
            let bad_row = (t + 1..r).find(|&i| {
                (t + 1..c).any(|j| !d[(i, j)].is_multiple_of(&d[(t, t)]))
            });
            match bad_row {
                Some(i) => {
                    add_row(&mut d, t, i, &BigInt::one());
                    add_row(&mut u, t, i, &BigInt::one());
                }
                None => break,
            }
        }
        if d[(t, t)].is_negative() {
            for j in 0..c {
                let x = -d[(t, j)].clone();
                d[(t, j)] = x;
            }
            for j in 0..r {
                let x = -u[(t, j)].clone();
                u[(t, j)] = x;
            }
        }
    }
    Snf { u, d, v }
}

/// Saturated basis of `{x in Z^c : m x = 0}`.
pub fn saturated_kernel(m: &IntMatrix) -> Vec<Vec<Int>> {
    let s = smith_normal_form(m);
    let rank = s.rank();
    (rank..m.cols()).map(|j| s.v.col(j)).collect()
}

/// Integer coefficients expressing `v` in the Z-span of `gens`, if it lies there.
pub fn z_span_coefficients(gens: &[Vec<Rat>], v: &[Rat]) -> Option<Vec<Int>> {
    let dim = v.len();
    if gens.is_empty() {
        return v.iter().all(|x| x.is_zero()).then(Vec::new);
    }
    let den = common_denominator(gens.iter().flatten().chain(v.iter()));
    let scale = |x: &Rat| (x * BigRational::from_integer(den.clone())).to_integer();
    let g = Matrix::from_cols(dim, &gens.iter().map(|c| c.iter().map(scale).collect()).collect::<Vec<_>>())
        .expect("generator lengths");
    let b: Vec<Int> = v.iter().map(scale).collect();
    let s = smith_normal_form(&g);
    let ub = s.u.mul_vec(&b);
    let diag = s.diagonal();
    let mut y = vec![BigInt::zero(); g.cols()];
    for (i, x) in ub.iter().enumerate() {
        match diag.get(i) {
            Some(di) if !di.is_zero() => {
                if !x.is_multiple_of(di) {
                    return None;
                }
                y[i] = x / di;
            }
            _ => {
                if !x.is_zero() {
                    return None;
                }
            }
        }
    }
    Some(s.v.mul_vec(&y))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    ambient_dim: usize,
    #[serde(with = "basis_serde")]
    basis: Vec<Vec<Int>>,
}

mod basis_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[Vec<Int>], s: S) -> std::result::Result<S::Ok, S::Error> {
        b.iter()
            .map(|r| r.iter().map(serde_exact::int_to_json).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Int>>, D::Error> {
        use crate::matrix::JsonEntry;
        use serde::de::Error as _;
        let raw = Vec::<Vec<serde_json::Value>>::deserialize(d)?;
        raw.iter()
            .map(|r| r.iter().map(Int::from_json).collect::<std::result::Result<Vec<_>, _>>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(D::Error::custom)
    }
}

impl Lattice {
    /// Lattice spanned by linearly independent integer vectors in `Z^ambient_dim`.
    pub fn new(ambient_dim: usize, basis: Vec<Vec<Int>>) -> Result<Self> {
        if basis.iter().any(|b| b.len() != ambient_dim) {
            return Err(Error::Dimension("basis vector length".into()));
        }
        let m = Matrix::from_rows(basis.clone())
            .map(|m| m.to_rat())
            .unwrap_or_else(|_| RatMatrix::zeros(0, ambient_dim));
        if !basis.is_empty() && m.rank() < basis.len() {
            return Err(Error::Dependent(format!("{} vectors", basis.len())));
        }
        Ok(Lattice { ambient_dim, basis })
    }

    pub fn standard(n: usize) -> Self {
        Lattice {
            ambient_dim: n,
            basis: (0..n).map(|i| crate::matrix::unit(n, i)).collect(),
        }
    }

    /// Lattice generated by arbitrary integer vectors, reduced to a basis.
    pub fn generated_by(ambient_dim: usize, gens: &[Vec<Int>]) -> Result<Self> {
        if gens.is_empty() {
            return Ok(Lattice { ambient_dim, basis: Vec::new() });
        }
        let g = Matrix::from_cols(ambient_dim, gens)?;
        let s = smith_normal_form(&g);
        // Columns of g * v are u^{-1} d: the first `rank` form a basis of the span.
        let gv = &g * &s.v;
        let basis = (0..s.rank()).map(|j| gv.col(j)).collect();
        Lattice::new(ambient_dim, basis)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Int>] {
        &self.basis
    }

    pub fn basis_rat(&self) -> Vec<Vec<Rat>> {
        self.basis.iter().map(|b| crate::matrix::rat_vec(b)).collect()
    }

    pub fn coordinates(&self, v: &[Rat]) -> Option<Vec<Int>> {
        z_span_coefficients(&self.basis_rat(), v)
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.coordinates(v).is_some()
    }

    /// Matrix of `a` (acting on ambient column vectors) in this basis, if `a` preserves
    /// the lattice.
    pub fn restrict(&self, a: &IntMatrix) -> Result<IntMatrix> {
        let cols = self
            .basis
            .iter()
            .map(|b| {
                self.coordinates(&crate::matrix::rat_vec(&a.mul_vec(b)))
                    .ok_or_else(|| Error::NotPreserved(format!("image of {b:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_cols(self.rank(), &cols)
    }

    fn from_coords(&self, c: &[Int]) -> Vec<Int> {
        let mut v = vec![BigInt::zero(); self.ambient_dim];
        for (x, b) in c.iter().zip(&self.basis) {
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi += x * bi;
            }
        }
        v
    }
}

/// Structure of a finitely generated abelian quotient, possibly with rational pieces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianQuotientDescriptor {
    /// Nontrivial invariant factors `d_1 | d_2 | ...` of the torsion part.
    #[serde(with = "serde_exact::int_vec")]
    pub invariant_factors: Vec<Int>,
    /// Copies of `Z`.
    pub free_rank: usize,
    /// Copies of `Q/Z`.
    pub divisible_rank: usize,
    /// Copies of `Q`.
    pub rational_rank: usize,
}

impl AbelianQuotientDescriptor {
    pub fn is_trivial(&self) -> bool {
        self.invariant_factors.is_empty()
            && self.free_rank == 0
            && self.divisible_rank == 0
            && self.rational_rank == 0
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0 && self.divisible_rank == 0 && self.rational_rank == 0
    }

    /// Order of a finite quotient.
    pub fn order(&self) -> Option<Int> {
        self.is_finite()
            .then(|| self.invariant_factors.iter().product())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuotientAmbient {
    /// `L / M` with `M` inside `L`.
    Integral,
    /// `(L tensor Q) / M`.
    Rational,
}

/// Describes `L / M` or `(L tensor Q) / M`, where `M` is the Z-span of `image`.
pub fn quotient_structure(
    l: &Lattice,
    image: &[Vec<Rat>],
    ambient: QuotientAmbient,
) -> Result<AbelianQuotientDescriptor> {
    let basis = l.basis_rat();
    // Coordinates of the image generators in L tensor Q with respect to the basis of L.
    let bm = Matrix::from_cols(l.ambient_dim(), &basis)?;
    let coords: Vec<Vec<Rat>> = image
        .iter()
        .map(|v| {
            bm.solve(v)
                .ok_or_else(|| Error::NotPreserved("image vector outside the span of L".into()))
        })
        .collect::<Result<_>>()?;
    let r = l.rank();
    let m_rank = if coords.is_empty() {
        0
    } else {
        Matrix::from_cols(r, &coords)?.rank()
    };
    match ambient {
        QuotientAmbient::Rational => Ok(AbelianQuotientDescriptor {
            invariant_factors: Vec::new(),
            free_rank: 0,
            divisible_rank: m_rank,
            rational_rank: r - m_rank,
        }),
        QuotientAmbient::Integral => {
            if coords.iter().flatten().any(|x| !x.is_integer()) {
                return Err(Error::NotPreserved("image is not contained in L".into()));
            }
            if coords.is_empty() {
                return Ok(AbelianQuotientDescriptor {
                    invariant_factors: Vec::new(),
                    free_rank: r,
                    divisible_rank: 0,
                    rational_rank: 0,
                });
            }
            let g = Matrix::from_cols(r, &coords)?
                .to_int()
                .expect("integral coordinates");
            let s = smith_normal_form(&g);
            let diag = s.diagonal();
            Ok(AbelianQuotientDescriptor {
                invariant_factors: diag
                    .into_iter()
                    .filter(|x| !x.is_zero() && !x.is_one())
                    .collect(),
                free_rank: r - s.rank(),
                divisible_rank: 0,
                rational_rank: 0,
            })
        }
    }
}

/// Fixed sublattice of an involution and a Q-basis of its (-1)-eigenspace.
pub fn fixed_and_antifixed(a: &IntMatrix, l: &Lattice) -> Result<(Lattice, Vec<Vec<Rat>>)> {
    if !a.is_square() || a.rows() != l.ambient_dim() {
        return Err(Error::Dimension("involution size".into()));
    }
    if !(a * a).is_identity() {
        return Err(Error::NotInvolution);
    }
    let al = l.restrict(a)?;
    let r = l.rank();
    let id = IntMatrix::identity(r);
    let fixed_coords = saturated_kernel(&(&id - &al));
    let fixed = Lattice::new(
        l.ambient_dim(),
        fixed_coords.iter().map(|c| l.from_coords(c)).collect(),
    )?;
    let anti_coords = saturated_kernel(&(&id + &al));
    let anti = anti_coords
        .iter()
        .map(|c| crate::matrix::rat_vec(&l.from_coords(c)))
        .collect();
    Ok((fixed, anti))
}

/// A subgroup `Z<lattice_gens> + Q<rational_dirs>` of `Q^dim`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Modulus {
    pub dim: usize,
    #[serde(with = "serde_exact::rat_vecs")]
    pub lattice_gens: Vec<Vec<Rat>>,
    #[serde(with = "serde_exact::rat_vecs")]
    pub rational_dirs: Vec<Vec<Rat>>,
}

/// Precomputed data for fast membership and canonical keys modulo a [`Modulus`].
#[derive(Clone, Debug)]
pub struct PreparedModulus {
    dim: usize,
    projection: RatMatrix,
    u: IntMatrix,
    diag: Vec<Int>,
    denom: Int,
}

impl Modulus {
    pub fn new(dim: usize, lattice_gens: Vec<Vec<Rat>>, rational_dirs: Vec<Vec<Rat>>) -> Result<Self> {
        if lattice_gens.iter().chain(&rational_dirs).any(|v| v.len() != dim) {
            return Err(Error::Dimension("modulus generator length".into()));
        }
        Ok(Modulus {
            dim,
            lattice_gens,
            rational_dirs,
        })
    }

    pub fn integral(dim: usize) -> Self {
        Modulus {
            dim,
            lattice_gens: (0..dim).map(|i| crate::matrix::unit(dim, i)).collect(),
            rational_dirs: Vec::new(),
        }
    }

    pub fn prepare(&self) -> PreparedModulus {
        let dim = self.dim;
        // Rows spanning the annihilator of the rational directions.
        let projection = if self.rational_dirs.is_empty() {
            RatMatrix::identity(dim)
        } else {
            let dirs = Matrix::from_rows(self.rational_dirs.clone()).expect("rows");
            let ann = dirs.kernel();
            if ann.is_empty() {
                RatMatrix::zeros(0, dim)
            } else {
                Matrix::from_rows(ann).expect("rows")
            }
        };
        let k = projection.rows();
        let projected: Vec<Vec<Rat>> = self
            .lattice_gens
            .iter()
            .map(|g| projection.mul_vec(g))
            .collect();
        let denom = common_denominator(projected.iter().flatten());
        let dq = BigRational::from_integer(denom.clone());
        let g = if projected.is_empty() {
            IntMatrix::zeros(k, 0)
        } else {
            Matrix::from_cols(
                k,
                &projected
                    .iter()
                    .map(|c| c.iter().map(|x| (x * &dq).to_integer()).collect())
                    .collect::<Vec<_>>(),
            )
            .expect("lengths")
        };
        let s = smith_normal_form(&g);
        PreparedModulus {
            dim,
            projection,
            u: s.u.clone(),
            diag: s.diagonal(),
            denom,
        }
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.prepare().contains(v)
    }

    /// Equality as subgroups of `Q^dim`.
    pub fn same_subgroup(&self, other: &Modulus) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let (p, q) = (self.prepare(), other.prepare());
        let sub = |m: &Modulus, pm: &PreparedModulus| {
            m.lattice_gens.iter().all(|g| pm.contains(g))
                && m.rational_dirs.iter().all(|d| {
                    // A Q-line lies inside iff it is killed by the projection.
                    pm.projection.mul_vec(d).iter().all(|x| x.is_zero())
                })
        };
        sub(self, &q) && sub(other, &p)
    }
}

impl PreparedModulus {
    /// Canonical invariant of `v + modulus`: equal keys iff same coset.
    pub fn key(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(v.len(), self.dim, "vector length");
        let pv = self.projection.mul_vec(v);
        let dq = BigRational::from_integer(self.denom.clone());
        let scaled: Vec<Rat> = pv.iter().map(|x| x * &dq).collect();
        let uq = self.u.to_rat();
        let y = uq.mul_vec(&scaled);
        y.into_iter()
            .enumerate()
            .map(|(i, x)| match self.diag.get(i) {
                Some(d) if !d.is_zero() => {
                    let dd = BigRational::from_integer(d.clone());
                    let q = (&x / &dd).floor();
                    x - q * dd
                }
                _ => x,
            })
            .collect()
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.key(v).iter().all(|x| x.is_zero())
    }
}

/// The coset `representative + modulus`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CosetClass {
    #[serde(with = "serde_exact::rat_vec")]
    pub representative: Vec<Rat>,
    pub modulus: Modulus,
}

impl CosetClass {
    pub fn new(representative: Vec<Rat>, modulus: Modulus) -> Result<Self> {
        if representative.len() != modulus.dim {
            return Err(Error::Dimension("representative length".into()));
        }
        Ok(CosetClass {
            representative,
            modulus,
        })
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.modulus
            .contains(&crate::matrix::vsub(v, &self.representative))
    }

    /// Equality of cosets; errors when the moduli differ.
    pub fn same_class(&self, other: &CosetClass) -> Result<bool> {
        if !self.modulus.same_subgroup(&other.modulus) {
            return Err(Error::ModulusMismatch);
        }
        Ok(self.contains(&other.representative))
    }
}
