//! Based root data, their automorphisms and duals, central invariants of extended
//! groups, and concrete matrix models of classical groups.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::cyclotomic::{CycloMatrix, Cyclotomic};
use crate::error::{Error, Result};
use crate::lattice::{quotient_structure, AbelianQuotientDescriptor, Lattice, Modulus, QuotientAmbient};
use crate::matrix::{dot, rat_vec, unit, vadd, vsub, IntMatrix, Matrix, RatMatrix};
use crate::scalar::{serde_exact, Int, Rat, Ring};

/// Simple roots in `X^*` and simple coroots in `X_*`, both identified with `Z^rank` so
/// that the pairing is the dot product.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasedRootDatum {
    pub rank: usize,
    #[serde(with = "int_rows")]
    pub simple_roots: Vec<Vec<Int>>,
    #[serde(with = "int_rows")]
    pub simple_coroots: Vec<Vec<Int>>,
}

pub(crate) mod int_rows {
    use super::*;
    use crate::matrix::JsonEntry;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[Vec<Int>], s: S) -> std::result::Result<S::Ok, S::Error> {
        b.iter()
            .map(|r| r.iter().map(serde_exact::int_to_json).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Int>>, D::Error> {
        let raw = Vec::<Vec<serde_json::Value>>::deserialize(d)?;
        raw.iter()
            .map(|r| r.iter().map(Int::from_json).collect::<std::result::Result<Vec<_>, _>>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(D::Error::custom)
    }
}

#[cfg(test)]
fn ivec(v: &[i64]) -> Vec<Int> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn e_minus_e(n: usize, i: usize, j: usize) -> Vec<Int> {
    let mut v = vec![BigInt::from(0); n];
    v[i] = BigInt::from(1);
    v[j] = BigInt::from(-1);
    v
}

impl BasedRootDatum {
    pub fn new(rank: usize, simple_roots: Vec<Vec<Int>>, simple_coroots: Vec<Vec<Int>>) -> Result<Self> {
        let d = BasedRootDatum {
            rank,
            simple_roots,
            simple_coroots,
        };
        d.validate()?;
        Ok(d)
    }

    /// Checks shapes, independence, and that the Cartan matrix is of finite type.
    pub fn validate(&self) -> Result<()> {
        if self.simple_roots.len() != self.simple_coroots.len() {
            return Err(Error::InvalidDatum("root and coroot counts differ".into()));
        }
        if self
            .simple_roots
            .iter()
            .chain(&self.simple_coroots)
            .any(|v| v.len() != self.rank)
        {
            return Err(Error::InvalidDatum("vector length differs from rank".into()));
        }
        let s = self.semisimple_rank();
        if s > 0 {
            for set in [&self.simple_roots, &self.simple_coroots] {
                let m = Matrix::from_rows(set.clone())?.to_rat();
                if m.rank() < s {
                    return Err(Error::InvalidDatum("simple roots or coroots are dependent".into()));
                }
            }
        }
        check_finite_type(&self.cartan_matrix())
    }

    pub fn semisimple_rank(&self) -> usize {
        self.simple_roots.len()
    }

    /// `C[i][j] = <alpha_i, alpha_j^vee>`.
    pub fn cartan_matrix(&self) -> IntMatrix {
        let s = self.semisimple_rank();
        let mut c = IntMatrix::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                c[(i, j)] = dot(&self.simple_roots[i], &self.simple_coroots[j]);
            }
        }
        c
    }

    pub fn dual(&self) -> Self {
        BasedRootDatum {
            rank: self.rank,
            simple_roots: self.simple_coroots.clone(),
            simple_coroots: self.simple_roots.clone(),
        }
    }

    pub fn torus(n: usize) -> Self {
        BasedRootDatum {
            rank: n,
            simple_roots: Vec::new(),
            simple_coroots: Vec::new(),
        }
    }

    pub fn gl(n: usize) -> Self {
        let roots: Vec<Vec<Int>> = (0..n.saturating_sub(1)).map(|i| e_minus_e(n, i, i + 1)).collect();
        BasedRootDatum {
            rank: n,
            simple_roots: roots.clone(),
            simple_coroots: roots,
        }
    }

    /// Symplectic group of rank `n` (matrices of size `2n`).
    pub fn sp(n: usize) -> Self {
        let mut roots: Vec<Vec<Int>> = (0..n.saturating_sub(1)).map(|i| e_minus_e(n, i, i + 1)).collect();
        let mut coroots = roots.clone();
        if n > 0 {
            let mut long = vec![BigInt::from(0); n];
            long[n - 1] = BigInt::from(2);
            roots.push(long);
            coroots.push(unit(n, n - 1));
        }
        BasedRootDatum {
            rank: n,
            simple_roots: roots,
            simple_coroots: coroots,
        }
    }

    /// Odd special orthogonal group of rank `n` (matrices of size `2n + 1`).
    pub fn so_odd(n: usize) -> Self {
        self::BasedRootDatum::sp(n).dual()
    }

    /// Even special orthogonal group of rank `n` (matrices of size `2n`).
    pub fn so_even(n: usize) -> Self {
        let mut roots: Vec<Vec<Int>> = (0..n.saturating_sub(1)).map(|i| e_minus_e(n, i, i + 1)).collect();
        if n >= 2 {
            let mut v = vec![BigInt::from(0); n];
            v[n - 2] = BigInt::from(1);
            v[n - 1] = BigInt::from(1);
            roots.push(v);
        }
        BasedRootDatum {
            rank: n,
            simple_roots: roots.clone(),
            simple_coroots: roots,
        }
    }

    pub fn product(a: &Self, b: &Self) -> Self {
        let n = a.rank + b.rank;
        let pad = |v: &Vec<Int>, off: usize| {
            let mut w = vec![BigInt::from(0); n];
            for (i, x) in v.iter().enumerate() {
                w[off + i] = x.clone();
            }
            w
        };
        BasedRootDatum {
            rank: n,
            simple_roots: a
                .simple_roots
                .iter()
                .map(|v| pad(v, 0))
                .chain(b.simple_roots.iter().map(|v| pad(v, a.rank)))
                .collect(),
            simple_coroots: a
                .simple_coroots
                .iter()
                .map(|v| pad(v, 0))
                .chain(b.simple_coroots.iter().map(|v| pad(v, a.rank)))
                .collect(),
        }
    }

    /// Rational coweights `w_j` with `<alpha_i, w_j> = delta_ij`, chosen inside the span
    /// of the coroots.
    pub fn fundamental_coweights(&self) -> Vec<Vec<Rat>> {
        let s = self.semisimple_rank();
        if s == 0 {
            return Vec::new();
        }
        let roots = Matrix::from_rows(self.simple_roots.clone()).unwrap().to_rat();
        let coroots = Matrix::from_cols(self.rank, &self.simple_coroots.iter().map(|c| rat_vec(c)).collect::<Vec<_>>())
            .unwrap();
        // roots * coroots is the transposed Cartan matrix, invertible for finite type.
        let gram = &roots * &coroots;
        let inv = gram.inverse().expect("finite type Cartan matrix is invertible");
        (0..s)
            .map(|j| coroots.mul_vec(&inv.col(j)))
            .collect()
    }

    /// Rational vectors in `X_* tensor Q` pairing to zero with every root.
    pub fn root_annihilator(&self) -> Vec<Vec<Rat>> {
        if self.simple_roots.is_empty() {
            return (0..self.rank).map(|i| unit(self.rank, i)).collect();
        }
        Matrix::from_rows(self.simple_roots.clone()).unwrap().to_rat().kernel()
    }

    /// Exponents `v` with `exp(2 pi i v)` central, as a modulus: Z-span of the
    /// fundamental coweights and `X_*`, plus the rational annihilator of the roots.
    pub fn center_exponents(&self) -> Modulus {
        let mut gens: Vec<Vec<Rat>> = (0..self.rank).map(|i| unit(self.rank, i)).collect();
        gens.extend(self.fundamental_coweights());
        Modulus::new(self.rank, gens, self.root_annihilator()).expect("lengths")
    }

    pub fn is_central_exponent(&self, v: &[Rat]) -> bool {
        self.simple_roots
            .iter()
            .all(|r| dot(&rat_vec(r), v).is_integer())
    }
}

fn check_finite_type(c: &IntMatrix) -> Result<()> {
    let s = c.rows();
    for i in 0..s {
        if c[(i, i)] != BigInt::from(2) {
            return Err(Error::NotFiniteType(format!("diagonal entry {i} is not 2")));
        }
        for j in 0..s {
            if i != j {
                if c[(i, j)].is_positive() {
                    return Err(Error::NotFiniteType("positive off-diagonal entry".into()));
                }
                if c[(i, j)].is_zero_int() != c[(j, i)].is_zero_int() {
                    return Err(Error::NotFiniteType("asymmetric zero pattern".into()));
                }
            }
        }
    }
    // Symmetrizer d with d_i c_ij = d_j c_ji, found component by component.
    let mut d: Vec<Option<Rat>> = vec![None; s];
    for start in 0..s {
        if d[start].is_some() {
            continue;
        }
        d[start] = Some(<BigRational as One>::one());
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for j in 0..s {
                if i == j || c[(i, j)].is_zero_int() {
                    continue;
                }
                let want = d[i].clone().unwrap()
                    * BigRational::new(c[(i, j)].clone(), c[(j, i)].clone());
                match &d[j] {
                    None => {
                        d[j] = Some(want);
                        stack.push(j);
                    }
                    Some(dj) if *dj != want => {
                        return Err(Error::NotFiniteType("Cartan matrix is not symmetrizable".into()))
                    }
                    _ => {}
                }
            }
        }
    }
    let mut sym = RatMatrix::zeros(s, s);
    for i in 0..s {
        for j in 0..s {
            sym[(i, j)] = d[i].clone().unwrap() * BigRational::from_integer(c[(i, j)].clone());
        }
    }
    for k in 1..=s {
        let idx: Vec<usize> = (0..k).collect();
        if !sym.submatrix(&idx, &idx).det().is_positive() {
            return Err(Error::NotFiniteType("symmetrized Cartan matrix is not positive definite".into()));
        }
    }
    Ok(())
}

trait IsZeroInt {
    fn is_zero_int(&self) -> bool;
}

impl IsZeroInt for Int {
    fn is_zero_int(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}

/// Automorphism of a based root datum: an invertible integer matrix on `X^*` (the
/// push-forward action on characters) permuting the simple roots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatumAutomorphism {
    pub matrix: IntMatrix,
    pub permutation: Vec<usize>,
}

impl DatumAutomorphism {
    pub fn new(datum: &BasedRootDatum, matrix: IntMatrix, permutation: Vec<usize>) -> Result<Self> {
        let a = DatumAutomorphism { matrix, permutation };
        a.validate(datum)?;
        Ok(a)
    }

    pub fn identity(datum: &BasedRootDatum) -> Self {
        DatumAutomorphism {
            matrix: IntMatrix::identity(datum.rank),
            permutation: (0..datum.semisimple_rank()).collect(),
        }
    }

    pub fn validate(&self, datum: &BasedRootDatum) -> Result<()> {
        let n = datum.rank;
        if self.matrix.rows() != n || self.matrix.cols() != n {
            return Err(Error::Dimension("automorphism matrix size".into()));
        }
        let det = self.matrix.det_ring();
        if det.abs() != <BigInt as One>::one() {
            return Err(Error::InvalidDatum("automorphism matrix is not unimodular".into()));
        }
        let s = datum.semisimple_rank();
        let mut seen = vec![false; s];
        if self.permutation.len() != s || self.permutation.iter().any(|&p| p >= s || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidDatum("not a permutation of the simple roots".into()));
        }
        let co = self.cocharacter_matrix();
        for i in 0..s {
            let p = self.permutation[i];
            if self.matrix.mul_vec(&datum.simple_roots[i]) != datum.simple_roots[p] {
                return Err(Error::InvalidDatum(format!("simple root {i} not sent to simple root {p}")));
            }
            if co.mul_vec(&datum.simple_coroots[i]) != datum.simple_coroots[p] {
                return Err(Error::InvalidDatum(format!("simple coroot {i} not sent to simple coroot {p}")));
            }
        }
        Ok(())
    }

    /// The compatible action on `X_*`, namely the inverse transpose.
    pub fn cocharacter_matrix(&self) -> IntMatrix {
        self.matrix
            .to_rat()
            .inverse()
            .expect("unimodular")
            .transpose()
            .to_int()
            .expect("unimodular inverse is integral")
    }

    /// The automorphism of the dual datum with the same effect on simple roots.
    pub fn transfer(&self) -> Self {
        DatumAutomorphism {
            matrix: self.cocharacter_matrix(),
            permutation: self.permutation.clone(),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        DatumAutomorphism {
            matrix: &self.matrix * &other.matrix,
            permutation: other.permutation.iter().map(|&i| self.permutation[i]).collect(),
        }
    }

    /// Order as a matrix, if at most `bound`.
    pub fn order(&self, bound: u64) -> Option<u64> {
        let mut p = self.matrix.clone();
        for k in 1..=bound {
            if p.is_identity() {
                return Some(k);
            }
            p = &p * &self.matrix;
        }
        None
    }

    /// The distinguished automorphism of the general linear group: `-A` on characters
    /// with `A` the antidiagonal, reversing the Dynkin diagram.
    pub fn gl_outer(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m[(n - 1 - i, i)] = BigInt::from(-1);
        }
        let s = n.saturating_sub(1);
        DatumAutomorphism {
            matrix: m,
            permutation: (0..s).map(|i| s - 1 - i).collect(),
        }
    }
}

/// Whether `dual_aut` on the dual datum induces the transferred action of `aut`.
pub fn check_compatible(aut: &DatumAutomorphism, dual_aut: &DatumAutomorphism) -> bool {
    aut.transfer() == *dual_aut
}

/// Whether `theta` and the first invariant `a` commute as datum automorphisms.
pub fn commutes_with_first_invariant(theta: &DatumAutomorphism, a: &DatumAutomorphism) -> bool {
    theta.compose(a) == a.compose(theta)
}

/// Distinguished automorphisms are determined up to inner ones by their action on the
/// based datum, so two representatives define the same conjugacy class exactly when
/// their datum automorphisms agree.
pub fn same_outer_class(x: &DatumAutomorphism, y: &DatumAutomorphism) -> bool {
    x == y
}

/// Which group the central invariants describe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtendedKind {
    /// Dual-side E-group: the center involution is the first invariant itself.
    EGroup,
    /// Real-side extended group: the center involution is minus the first invariant.
    RealForm,
}

/// First and second invariants of an extended group, with exponents taken in `X_*` of
/// the group whose center is described.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtendedGroupInvariants {
    pub datum: BasedRootDatum,
    pub kind: ExtendedKind,
    /// Involution on `X_*`, preserving the based datum up to the given permutation.
    pub first_invariant: IntMatrix,
    /// Exponent of a representative of the second invariant.
    #[serde(with = "serde_exact::rat_vec")]
    pub second_invariant: Vec<Rat>,
}

/// A reproducible record of a membership decision.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MembershipCertificate {
    pub holds: bool,
    pub reason: String,
    #[serde(with = "serde_exact::rat_vec")]
    pub tested_vector: Vec<Rat>,
    pub modulus: Option<Modulus>,
}

impl ExtendedGroupInvariants {
    pub fn new(
        datum: BasedRootDatum,
        kind: ExtendedKind,
        first_invariant: IntMatrix,
        second_invariant: Vec<Rat>,
    ) -> Result<Self> {
        let inv = ExtendedGroupInvariants {
            datum,
            kind,
            first_invariant,
            second_invariant,
        };
        inv.validate()?;
        Ok(inv)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.datum.rank;
        if self.first_invariant.rows() != n || !(&self.first_invariant * &self.first_invariant).is_identity() {
            return Err(Error::NotInvolution);
        }
        if self.second_invariant.len() != n {
            return Err(Error::Dimension("second invariant length".into()));
        }
        if !self.datum.is_central_exponent(&self.second_invariant) {
            return Err(Error::InvalidDatum("second invariant is not central".into()));
        }
        let c = self.center_involution();
        let diff = vsub(&c.mul_vec(&self.second_invariant), &self.second_invariant);
        if !Lattice::standard(n).contains(&diff) {
            return Err(Error::InvalidDatum("second invariant is not fixed by the center involution".into()));
        }
        Ok(())
    }

    /// The involution of the center, on exponents.
    pub fn center_involution(&self) -> RatMatrix {
        let a = self.first_invariant.to_rat();
        match self.kind {
            ExtendedKind::EGroup => a,
            ExtendedKind::RealForm => -&a,
        }
    }

    /// `(1 + c) Z + X_*` on exponents: the modulus for second invariants.
    pub fn second_invariant_modulus(&self) -> Modulus {
        let n = self.datum.rank;
        let c = self.center_involution();
        let one_plus = &RatMatrix::identity(n) + &c;
        let mut gens: Vec<Vec<Rat>> = (0..n).map(|i| unit(n, i)).collect();
        gens.extend(self.datum.fundamental_coweights().iter().map(|w| one_plus.mul_vec(w)));
        let dirs = self
            .datum
            .root_annihilator()
            .iter()
            .map(|w| one_plus.mul_vec(w))
            .collect();
        Modulus::new(n, gens, dirs).expect("lengths")
    }

    /// `(1 - c) Z + X_*`: cocycle exponents differing by this are cohomologous.
    pub fn coboundary_modulus(&self) -> Modulus {
        let n = self.datum.rank;
        let c = self.center_involution();
        let one_minus = &RatMatrix::identity(n) - &c;
        let mut gens: Vec<Vec<Rat>> = (0..n).map(|i| unit(n, i)).collect();
        gens.extend(self.datum.fundamental_coweights().iter().map(|w| one_minus.mul_vec(w)));
        let dirs = self
            .datum
            .root_annihilator()
            .iter()
            .map(|w| one_minus.mul_vec(w))
            .collect();
        Modulus::new(n, gens, dirs).expect("lengths")
    }

    /// Whether `theta` (acting on `X_*`) extends to the extended group: it must commute
    /// with the first invariant and fix the second invariant modulo `(1 + c) Z`.
    pub fn extension_exists(&self, theta: &IntMatrix) -> MembershipCertificate {
        let a = &self.first_invariant;
        if &(theta * a) != &(a * theta) {
            return MembershipCertificate {
                holds: false,
                reason: "automorphism does not commute with the first invariant".into(),
                tested_vector: Vec::new(),
                modulus: None,
            };
        }
        let v = &self.second_invariant;
        let diff = vsub(&theta.to_rat().mul_vec(v), v);
        let m = self.second_invariant_modulus();
        let holds = m.contains(&diff);
        MembershipCertificate {
            holds,
            reason: if holds {
                "second invariant is preserved".into()
            } else {
                "second invariant is moved".into()
            },
            tested_vector: diff,
            modulus: Some(m),
        }
    }

    /// Character group of `ker(1 + c)` on the center, namely
    /// `X^* / (Z Phi + (1 + c^T) X^*)`. Choices of extension differ by this kernel.
    pub fn extension_ambiguity(&self) -> AbelianQuotientDescriptor {
        let n = self.datum.rank;
        let ct = self.center_involution().transpose();
        let one_plus = &RatMatrix::identity(n) + &ct;
        let mut image: Vec<Vec<Rat>> = self.datum.simple_roots.iter().map(|r| rat_vec(r)).collect();
        image.extend((0..n).map(|i| one_plus.col(i)));
        quotient_structure(&Lattice::standard(n), &image, QuotientAmbient::Integral)
            .expect("image lies in the character lattice")
    }
}

/// A central element `exp(2 pi i torsion) * exp(log_modulus)` with both parts in
/// `X_* tensor Q`. The second part is a formal logarithm of the absolute value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralElement {
    #[serde(with = "serde_exact::rat_vec")]
    pub torsion: Vec<Rat>,
    #[serde(with = "serde_exact::rat_vec")]
    pub log_modulus: Vec<Rat>,
}

impl CentralElement {
    pub fn torsion(v: Vec<Rat>) -> Self {
        let n = v.len();
        CentralElement {
            torsion: v,
            log_modulus: vec![BigRational::from_integer(0.into()); n],
        }
    }
}

/// An automorphism of an E-group: `theta` on `X_*` of the dual torus together with a
/// cocycle exponent, sending the distinguished element to `exp(-2 pi i alpha)` times it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GammaAutomorphism {
    pub theta: IntMatrix,
    pub cocycle: CentralElement,
}

impl GammaAutomorphism {
    /// Twists `theta` by a cocycle. The cocycle must lie in `ker(1 + c)` and be central.
    pub fn cocycle_twist(inv: &ExtendedGroupInvariants, theta: IntMatrix, alpha: CentralElement) -> Result<Self> {
        let n = inv.datum.rank;
        if alpha.torsion.len() != n || alpha.log_modulus.len() != n {
            return Err(Error::Dimension("cocycle length".into()));
        }
        let c = inv.center_involution();
        let s = vadd(&alpha.torsion, &c.mul_vec(&alpha.torsion));
        if !Lattice::standard(n).contains(&s) {
            return Err(Error::Constraint("cocycle is not killed by 1 + c".into()));
        }
        let l = vadd(&alpha.log_modulus, &c.mul_vec(&alpha.log_modulus));
        if l.iter().any(|x| !num_traits::Zero::is_zero(x)) {
            return Err(Error::Constraint("cocycle modulus part is not killed by 1 + c".into()));
        }
        if !inv.datum.is_central_exponent(&alpha.torsion) {
            return Err(Error::Constraint("cocycle is not central".into()));
        }
        Ok(GammaAutomorphism {
            theta,
            cocycle: alpha,
        })
    }

    /// Exponent shift applied to the distinguished element: `-alpha`.
    pub fn value_on_delta(&self) -> CentralElement {
        CentralElement {
            torsion: self.cocycle.torsion.iter().map(|x| -x).collect(),
            log_modulus: self.cocycle.log_modulus.iter().map(|x| -x).collect(),
        }
    }

    /// Two twists of the same automorphism define conjugate extensions when the cocycles
    /// differ by a coboundary.
    pub fn cohomologous(&self, other: &Self, inv: &ExtendedGroupInvariants) -> bool {
        self.theta == other.theta
            && self.cocycle.log_modulus == other.cocycle.log_modulus
            && inv
                .coboundary_modulus()
                .contains(&vsub(&self.cocycle.torsion, &other.cocycle.torsion))
    }

    /// Order of the automorphism, or `None` when infinite. `bound` caps the search for
    /// the order of `theta`.
    pub fn order(&self, bound: u64) -> Result<Option<u64>> {
        let n = self.theta.rows();
        let mut m = None;
        let mut p = self.theta.clone();
        for k in 1..=bound {
            if p.is_identity() {
                m = Some(k);
                break;
            }
            p = &p * &self.theta;
        }
        let m = m.ok_or_else(|| Error::NoCertificate(format!("theta has no order up to {bound}")))?;
        let t = self.theta.to_rat();
        let mut tor = vec![BigRational::from_integer(0.into()); n];
        let mut lm = tor.clone();
        let (mut vt, mut vl) = (self.cocycle.torsion.clone(), self.cocycle.log_modulus.clone());
        for _ in 0..m {
            tor = vadd(&tor, &vt);
            lm = vadd(&lm, &vl);
            vt = t.mul_vec(&vt);
            vl = t.mul_vec(&vl);
        }
        if lm.iter().any(|x| !num_traits::Zero::is_zero(x)) {
            return Ok(None);
        }
        let den = crate::scalar::common_denominator(tor.iter());
        Ok(Some(m * den.to_u64().expect("order fits in u64")))
    }
}

/// Matrix models of classical groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalKind {
    Gl,
    So,
    O,
    Sp,
}

/// A classical group of `n x n` matrices; for orthogonal and symplectic kinds, the
/// isometry group of `form` (`x form x^T = form`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixGroupModel {
    pub kind: ClassicalKind,
    pub n: usize,
    pub form: Option<IntMatrix>,
}

impl MatrixGroupModel {
    pub fn gl(n: usize) -> Self {
        MatrixGroupModel {
            kind: ClassicalKind::Gl,
            n,
            form: None,
        }
    }

    pub fn contains(&self, x: &CycloMatrix) -> bool {
        if x.rows() != self.n || x.cols() != self.n {
            return false;
        }
        match (&self.kind, &self.form) {
            (ClassicalKind::Gl, _) => !Ring::is_zero(&x.det()),
            (_, None) => false,
            (kind, Some(f)) => {
                let fc = CycloMatrix::from_int_matrix(f);
                if &(x * &fc) * &x.transpose() != fc {
                    return false;
                }
                match kind {
                    ClassicalKind::So => x.det() == Cyclotomic::one(),
                    _ => true,
                }
            }
        }
    }

    /// Lie algebra membership: `X form + form X^T = 0` for form-preserving kinds.
    pub fn lie_algebra_contains(&self, x: &RatMatrix) -> bool {
        match &self.form {
            None => x.rows() == self.n,
            Some(f) => {
                let fr = f.to_rat();
                (&(x * &fr) + &(&fr * &x.transpose())).is_zero()
            }
        }
    }

    pub fn lie_algebra_dimension(&self) -> usize {
        let n = self.n;
        match self.kind {
            ClassicalKind::Gl => n * n,
            ClassicalKind::So | ClassicalKind::O => n * n.saturating_sub(1) / 2,
            ClassicalKind::Sp => n * (n + 1) / 2,
        }
    }
}

/// `J~ = D A` with `D = diag(1, -1, 1, ...)` and `A` the antidiagonal of ones.
pub fn standard_twist_form(n: usize) -> IntMatrix {
    let mut j = IntMatrix::zeros(n, n);
    for i in 0..n {
        j[(i, n - 1 - i)] = BigInt::from(if i % 2 == 0 { 1 } else { -1 });
    }
    j
}

/// The antidiagonal matrix of ones.
pub fn antidiagonal(n: usize) -> IntMatrix {
    let mut a = IntMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, n - 1 - i)] = BigInt::from(1);
    }
    a
}

/// An automorphism of `GL_n`: the identity, or `x -> J x^{-T} J^{-1}` for a form `J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GlAutomorphism {
    Identity { n: usize },
    Twisted { form: IntMatrix },
}

impl GlAutomorphism {
    pub fn standard_twist(n: usize) -> Self {
        GlAutomorphism::Twisted {
            form: standard_twist_form(n),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            GlAutomorphism::Identity { n } => *n,
            GlAutomorphism::Twisted { form } => form.rows(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, GlAutomorphism::Identity { .. })
    }

    pub fn apply(&self, x: &CycloMatrix) -> Result<CycloMatrix> {
        match self {
            GlAutomorphism::Identity { .. } => Ok(x.clone()),
            GlAutomorphism::Twisted { form } => {
                let j = CycloMatrix::from_int_matrix(form);
                let ji = j.inverse().ok_or(Error::Singular)?;
                let xi = x.inverse().ok_or(Error::Singular)?;
                Ok(&(&j * &xi.transpose()) * &ji)
            }
        }
    }

    /// Differential on the Lie algebra: `X -> -J X^T J^{-1}`.
    pub fn differential<F: crate::scalar::Field + From<Int>>(&self, x: &Matrix<F>) -> Matrix<F> {
        match self {
            GlAutomorphism::Identity { .. } => x.clone(),
            GlAutomorphism::Twisted { form } => {
                let j: Matrix<F> = form.map(|v| F::from(v.clone()));
                let ji = j.inverse().expect("form is invertible");
                -&(&(&j * &x.transpose()) * &ji)
            }
        }
    }

    pub fn order(&self) -> u64 {
        match self {
            GlAutomorphism::Identity { .. } => 1,
            GlAutomorphism::Twisted { form } => {
                // J J^{-T} central makes the map an involution.
                let fr = form.to_rat();
                let c = &fr * &fr.inverse().unwrap().transpose();
                if c.is_diagonal() && c.diagonal().windows(2).all(|w| w[0] == w[1]) {
                    2
                } else {
                    0
                }
            }
        }
    }

    /// Whether the automorphism preserves the standard pinning: the diagonal torus, the
    /// upper triangular Borel subgroup and the set of simple root vectors `E_{i,i+1}`.
    pub fn is_distinguished(&self) -> bool {
        let n = self.n();
        let e = |i: usize, j: usize| {
            let mut m = RatMatrix::zeros(n, n);
            m[(i, j)] = <BigRational as One>::one();
            m
        };
        let simple: Vec<RatMatrix> = (0..n.saturating_sub(1)).map(|i| e(i, i + 1)).collect();
        let torus_ok = (0..n).all(|i| self.differential(&e(i, i)).is_diagonal());
        torus_ok && simple.iter().all(|x| simple.contains(&self.differential(x)))
    }

    /// The datum automorphism on the diagonal torus, when the form is monomial.
    pub fn datum_automorphism(&self) -> Result<DatumAutomorphism> {
        let n = self.n();
        let d = BasedRootDatum::gl(n);
        let m = self.on_characters()?;
        let mut perm = Vec::new();
        for r in &d.simple_roots {
            let img = m.mul_vec(r);
            let p = d
                .simple_roots
                .iter()
                .position(|s| *s == img)
                .ok_or_else(|| Error::Unsupported("automorphism does not preserve the Borel".into()))?;
            perm.push(p);
        }
        DatumAutomorphism::new(&d, m, perm)
    }

    /// Action on the diagonal torus characters, when the form is monomial.
    pub fn on_characters(&self) -> Result<IntMatrix> {
        let n = self.n();
        match self {
            GlAutomorphism::Identity { .. } => Ok(IntMatrix::identity(n)),
            GlAutomorphism::Twisted { form } => {
                // J e_j = +-e_{pi(j)}; then J diag(t)^{-1} J^{-1} = diag(t_{pi^{-1}(i)})^{-1},
                // so e_j is sent to -e_{pi(j)}.
                let mut m = IntMatrix::zeros(n, n);
                for j in 0..n {
                    let col = form.col(j);
                    let nz: Vec<usize> = (0..n).filter(|&i| !num_traits::Zero::is_zero(&col[i])).collect();
                    if nz.len() != 1 {
                        return Err(Error::Unsupported("form is not monomial".into()));
                    }
                    m[(nz[0], j)] = BigInt::from(-1);
                }
                Ok(m)
            }
        }
    }
}

/// A strong real form of `GL_n` through its conjugation `g -> x conj(g) x^{-1}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RealFormConjugation {
    pub x: CycloMatrix,
}

impl RealFormConjugation {
    pub fn split(n: usize) -> Self {
        RealFormConjugation {
            x: CycloMatrix::identity(n),
        }
    }

    pub fn apply(&self, g: &CycloMatrix) -> Result<CycloMatrix> {
        let xi = self.x.inverse().ok_or(Error::Singular)?;
        Ok(&(&self.x * &g.conj()) * &xi)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowerIdentityReport {
    pub m: u64,
    /// `theta(g) theta^2(g) ... theta^m(g)`.
    pub product: CycloMatrix,
    pub preserves_real_form: bool,
    pub identity_holds: bool,
    pub product_is_real: bool,
}

/// Checks `(theta o Int(g))^m = Int(theta(g) ... theta^m(g))` on test elements and that
/// the product lies in the real points when `theta o Int(g)` preserves the real form.
pub fn verify_twisted_power_identity(
    theta: &GlAutomorphism,
    g: &CycloMatrix,
    m: u64,
    real_form: &RealFormConjugation,
) -> Result<PowerIdentityReport> {
    let n = theta.n();
    if g.rows() != n {
        return Err(Error::Dimension("element size".into()));
    }
    let gi = g.inverse().ok_or(Error::Singular)?;
    let step = |x: &CycloMatrix| -> Result<CycloMatrix> { theta.apply(&(&(g * x) * &gi)) };

    let mut product = CycloMatrix::identity(n);
    let mut power = g.clone();
    for _ in 0..m {
        power = theta.apply(&power)?;
        product = &product * &power;
    }
    let theta_m_is_id = {
        let mut ok = true;
        for t in test_elements(n) {
            let mut y = t.clone();
            for _ in 0..m {
                y = theta.apply(&y)?;
            }
            ok &= y == t;
        }
        ok
    };
    let pi = product.inverse().ok_or(Error::Singular)?;
    let mut identity_holds = theta_m_is_id;
    for t in test_elements(n) {
        let mut lhs = t.clone();
        for _ in 0..m {
            lhs = step(&lhs)?;
        }
        let rhs = &(&product * &t) * &pi;
        identity_holds &= lhs == rhs;
    }
    // theta(g) theta(x) conj(theta(g))^{-1} = x for the real form element x.
    let tg = theta.apply(g)?;
    let tx = theta.apply(&real_form.x)?;
    let lhs = &(&tg * &tx) * &tg.conj().inverse().ok_or(Error::Singular)?;
    let preserves_real_form = lhs == real_form.x;
    let product_is_real = real_form.apply(&product)? == product;
    Ok(PowerIdentityReport {
        m,
        product,
        preserves_real_form,
        identity_holds,
        product_is_real,
    })
}

/// Invertible matrices that generate enough of `GL_n` to detect unequal automorphisms.
fn test_elements(n: usize) -> Vec<CycloMatrix> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut e = CycloMatrix::identity(n);
                e[(i, j)] = Cyclotomic::one();
                out.push(e);
            }
        }
        let mut d = CycloMatrix::identity(n);
        d[(i, i)] = Cyclotomic::from_i64(2);
        out.push(d);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn classical_data_are_finite_type() {
        for n in 1..5 {
            BasedRootDatum::gl(n).validate().unwrap();
            BasedRootDatum::sp(n).validate().unwrap();
            BasedRootDatum::so_odd(n).validate().unwrap();
        }
        for n in 2..5 {
            BasedRootDatum::so_even(n).validate().unwrap();
        }
    }

    #[test]
    fn affine_cartan_is_rejected() {
        // Affine A1: Cartan [[2,-2],[-2,2]].
        let d = BasedRootDatum {
            rank: 2,
            simple_roots: vec![ivec(&[1, -1]), ivec(&[-1, 1])],
            simple_coroots: vec![ivec(&[1, -1]), ivec(&[-1, 1])],
        };
        assert!(d.validate().is_err());
    }

    #[test]
    fn dual_of_symplectic_is_odd_orthogonal() {
        let sp = BasedRootDatum::sp(3);
        assert_eq!(sp.dual(), BasedRootDatum::so_odd(3));
        assert_eq!(sp.dual().cartan_matrix(), sp.cartan_matrix().transpose());
    }

    #[test]
    fn gl_outer_automorphism_is_self_dual() {
        for n in 1..6 {
            let d = BasedRootDatum::gl(n);
            let t = DatumAutomorphism::gl_outer(n);
            t.validate(&d).unwrap();
            assert!(check_compatible(&t, &t));
            assert_eq!(t.transfer().transfer(), t);
            assert_eq!(GlAutomorphism::standard_twist(n).on_characters().unwrap(), t.matrix);
        }
    }

    #[test]
    fn twist_form_for_gl2() {
        assert_eq!(standard_twist_form(2), IntMatrix::from_i64(&[&[0, 1], &[-1, 0]]));
        assert_eq!(GlAutomorphism::standard_twist(2).order(), 2);
    }

    #[test]
    fn center_of_sl2_and_gl1() {
        // SL2 as Sp(1): center exponents Z/2 generated by the coweight 1/2.
        let sl2 = BasedRootDatum::sp(1);
        assert_eq!(sl2.fundamental_coweights(), vec![vec![rat(1, 2)]]);
        let inv = ExtendedGroupInvariants::new(sl2, ExtendedKind::EGroup, IntMatrix::from_i64(&[&[1]]), vec![rat(1, 2)]).unwrap();
        assert!(!inv.second_invariant_modulus().contains(&[rat(1, 2)]));
        let gl1 = BasedRootDatum::torus(1);
        let split = ExtendedGroupInvariants::new(gl1.clone(), ExtendedKind::EGroup, IntMatrix::from_i64(&[&[1]]), vec![rat(0, 1)]).unwrap();
        assert_eq!(split.extension_ambiguity().invariant_factors, vec![BigInt::from(2)]);
        let compact = ExtendedGroupInvariants::new(gl1, ExtendedKind::EGroup, IntMatrix::from_i64(&[&[-1]]), vec![rat(0, 1)]).unwrap();
        assert_eq!(compact.extension_ambiguity().free_rank, 1);
    }

    #[test]
    fn power_identity_on_gl2() {
        let theta = GlAutomorphism::standard_twist(2);
        let g = CycloMatrix::diag(&[Cyclotomic::one(), Cyclotomic::from_i64(-1)]);
        let r = verify_twisted_power_identity(&theta, &g, 2, &RealFormConjugation::split(2)).unwrap();
        assert!(r.identity_holds && r.preserves_real_form && r.product_is_real);
        assert_eq!(r.product, CycloMatrix::identity(2).scale(&Cyclotomic::from_i64(-1)));
    }
}
