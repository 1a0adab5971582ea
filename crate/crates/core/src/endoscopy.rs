//! Twisted endoscopic data for `GL_N` with the standard outer involution: the forms
//! `J~` and `J_{O,S}`, the endoscopic element `s`, its fixed-point group, equivalence of
//! data and the finite-order normalization of `s`.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::cyclotomic::{CycloMatrix, Cyclotomic};
use crate::error::{Error, Result};
use crate::lattice::saturated_kernel;
use crate::matrix::{IntMatrix, Matrix};
use crate::poly::minimal_polynomial_krylov;
use crate::rootdata::{
    antidiagonal, check_compatible, standard_twist_form, BasedRootDatum, ClassicalKind, DatumAutomorphism,
    ExtendedGroupInvariants, ExtendedKind, GlAutomorphism, MatrixGroupModel,
};
use crate::scalar::{Field, Rat, Ring};

/// The form defining the outer involution, as recorded in outputs.
pub const TILDE_J_CONVENTION: &str = "J~ = D A, D = diag(1, -1, 1, ...), A antidiagonal of ones; theta(x) = J~ x^-T J~^-1";

/// `J~ = D A`: `D = diag(1, -1, 1, ...)`, `A` the antidiagonal of ones.
pub fn make_tilde_j(n: usize) -> Result<IntMatrix> {
    if n == 0 {
        return Err(Error::Dimension("N must be positive".into()));
    }
    Ok(standard_twist_form(n))
}

/// `blockdiag(A_{N_O}, J~_{2 N_S'})`, the form whose isometry group is `O_{N_O} x Sp_{2N_S'}`
/// up to sign.
pub fn j_os(n_o: usize, n_s: usize) -> IntMatrix {
    let a = antidiagonal(n_o);
    let j = standard_twist_form(2 * n_s);
    IntMatrix::block_diag(&[&a, &j])
}

fn cyc(m: &IntMatrix) -> CycloMatrix {
    CycloMatrix::from_int_matrix(m)
}

fn is_scalar(m: &CycloMatrix) -> bool {
    m.is_diagonal() && m.diagonal().windows(2).all(|w| w[0] == w[1])
}

/// `x -> J~ x^{-T} J~^{-1}` on `GL_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistingAutomorphismGL {
    pub n: usize,
    pub tilde_j: IntMatrix,
}

impl TwistingAutomorphismGL {
    pub fn new(n: usize) -> Result<Self> {
        let t = TwistingAutomorphismGL {
            n,
            tilde_j: make_tilde_j(n)?,
        };
        if !t.is_involution() {
            return Err(Error::NotInvolution);
        }
        Ok(t)
    }

    /// `J~ (J~^T)^{-1}` is central, so the automorphism squares to the identity.
    pub fn is_involution(&self) -> bool {
        let j = cyc(&self.tilde_j);
        match j.transpose().inverse() {
            Some(jti) => is_scalar(&(&j * &jti)),
            None => false,
        }
    }

    pub fn apply(&self, x: &CycloMatrix) -> Result<CycloMatrix> {
        self.as_gl().apply(x)
    }

    /// `X -> -J~ X^T J~^{-1}`.
    pub fn differential(&self, x: &CycloMatrix) -> CycloMatrix {
        let j = cyc(&self.tilde_j);
        let ji = j.inverse().expect("invertible form");
        -&(&(&j * &x.transpose()) * &ji)
    }

    /// Whether the automorphism preserves the standard Whittaker datum: the diagonal
    /// torus, the upper Borel and the simple root vectors.
    pub fn preserves_whittaker_datum(&self) -> bool {
        self.as_gl().is_distinguished()
    }

    pub fn as_gl(&self) -> GlAutomorphism {
        GlAutomorphism::Twisted {
            form: self.tilde_j.clone(),
        }
    }
}

/// The linear map `X -> Ad(s)(dtheta(X))` on `gl_N` in the basis of matrix units, with
/// `theta` the identity when `None`.
pub fn twisted_adjoint(s: &CycloMatrix, theta: Option<&TwistingAutomorphismGL>) -> Result<CycloMatrix> {
    let n = s.rows();
    let si = s.inverse().ok_or(Error::Singular)?;
    let mut cols = Vec::with_capacity(n * n);
    for k in 0..n * n {
        let mut e = vec![Cyclotomic::zero(); n * n];
        e[k] = Cyclotomic::one();
        let x = CycloMatrix::unflatten(n, &e);
        let y = match theta {
            Some(t) => t.differential(&x),
            None => x,
        };
        cols.push((&(s * &y) * &si).flatten());
    }
    Matrix::from_cols(n * n, &cols)
}

/// True iff `Ad(s) o dtheta` is diagonalizable: its minimal polynomial is coprime to its
/// derivative, which in characteristic zero means squarefree over the algebraic closure.
pub fn check_semisimplicity(s: &CycloMatrix, theta: Option<&TwistingAutomorphismGL>) -> Result<bool> {
    let t = twisted_adjoint(s, theta)?;
    // Rational elements are common; exact rational arithmetic is much cheaper.
    Ok(match t.to_rat() {
        Some(q) => minimal_polynomial_krylov(&q).is_squarefree(),
        None => minimal_polynomial_krylov(&t).is_squarefree(),
    })
}

/// The fixed points of `Ad(s) o dtheta` on `gl_N`, with closure and center data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedAlgebra {
    pub dimension: usize,
    pub basis: Vec<CycloMatrix>,
    pub center_basis: Vec<CycloMatrix>,
    pub bracket_closed: bool,
}

pub fn fixed_point_subalgebra(s: &CycloMatrix, theta: Option<&TwistingAutomorphismGL>) -> Result<FixedAlgebra> {
    let t = twisted_adjoint(s, theta)?;
    let (basis, center_basis, bracket_closed) = match t.to_rat() {
        Some(q) => {
            let (b, c, closed) = fixed_points(&q, s.rows());
            let lift = |v: Vec<Matrix<Rat>>| v.iter().map(CycloMatrix::from_rat_matrix).collect::<Vec<_>>();
            (lift(b), lift(c), closed)
        }
        None => fixed_points(&t, s.rows()),
    };
    Ok(FixedAlgebra {
        dimension: basis.len(),
        basis,
        center_basis,
        bracket_closed,
    })
}

/// Kernel of `t - 1` on `gl_n`, its center, and whether it is closed under brackets.
fn fixed_points<F: Field>(t: &Matrix<F>, n: usize) -> (Vec<Matrix<F>>, Vec<Matrix<F>>, bool) {
    let basis: Vec<Matrix<F>> = (t - &Matrix::identity(n * n))
        .kernel()
        .iter()
        .map(|v| Matrix::unflatten(n, v))
        .collect();
    // T is a Lie algebra automorphism, so closure only needs T([X, Y]) = [X, Y].
    let mut bracket_closed = true;
    'outer: for i in 0..basis.len() {
        for j in i + 1..basis.len() {
            let b = basis[i].bracket(&basis[j]).flatten();
            if t.mul_vec(&b) != b {
                bracket_closed = false;
                break 'outer;
            }
        }
    }
    let center = center_of(&basis);
    (basis, center, bracket_closed)
}

fn center_of<F: Field>(basis: &[Matrix<F>]) -> Vec<Matrix<F>> {
    let d = basis.len();
    if d == 0 {
        return Vec::new();
    }
    let n = basis[0].rows();
    // Column k lists [X_k, X_i] for every i.
    let cols: Vec<Vec<F>> = basis
        .iter()
        .map(|xk| basis.iter().flat_map(|xi| xk.bracket(xi).flatten()).collect())
        .collect();
    let m = Matrix::from_cols(d * n * n, &cols).expect("equal lengths");
    m.kernel()
        .iter()
        .map(|c| {
            let mut z = Matrix::zeros(n, n);
            for (ck, xk) in c.iter().zip(basis) {
                z = &z + &xk.scale(ck);
            }
            z
        })
        .collect()
}

impl FixedAlgebra {
    /// Whether the span of `self` equals the span of `other` after conjugating by `g`.
    pub fn conjugate_equals(&self, g: &CycloMatrix, other: &FixedAlgebra) -> bool {
        if self.dimension != other.dimension {
            return false;
        }
        let gi = match g.inverse() {
            Some(x) => x,
            None => return false,
        };
        let span: Vec<Vec<Cyclotomic>> = other.basis.iter().map(|x| x.flatten()).collect();
        self.basis
            .iter()
            .all(|x| Matrix::in_span(&span, &(&(g * x) * &gi).flatten()))
    }

    /// Whether `z` lies in the identity component of the center of the group with this
    /// Lie algebra, for a diagonal center. `z` must commute with the algebra and lie in
    /// the subtorus `exp(center)`, cut out by the integral characters killing the center.
    pub fn connected_center_contains(&self, z: &CycloMatrix) -> Result<bool> {
        if self.basis.iter().any(|x| &(z * x) != &(x * z)) {
            return Ok(false);
        }
        if !z.is_diagonal() {
            return Ok(false);
        }
        let n = z.rows();
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        for c in &self.center_basis {
            if !c.is_diagonal() {
                return Err(Error::Unsupported("center is not diagonal in this realization".into()));
            }
            let q: Option<Vec<Rat>> = c.diagonal().iter().map(|x| x.as_rational()).collect();
            let q = q.ok_or_else(|| Error::Unsupported("center is not rational".into()))?;
            let den = crate::scalar::common_denominator(&q);
            rows.push(q.iter().map(|x| (x * BigRational::from_integer(den.clone())).to_integer()).collect());
        }
        let chars = if rows.is_empty() {
            (0..n).map(|i| crate::matrix::unit::<BigInt>(n, i)).collect()
        } else {
            saturated_kernel(&Matrix::from_rows(rows)?)
        };
        let diag = z.diagonal();
        for m in chars {
            let mut p = Cyclotomic::one();
            for (zk, mk) in diag.iter().zip(&m) {
                let e: i64 = mk.try_into().map_err(|_| Error::Unsupported("large exponent".into()))?;
                let base = if e < 0 { zk.inv().ok_or(Error::Singular)? } else { zk.clone() };
                for _ in 0..e.unsigned_abs() {
                    p = p * base.clone();
                }
            }
            if !p.is_one() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Whether the Gamma-action on the dual endoscopic group may be a nontrivial semidirect
/// product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaForm {
    Direct,
    Semidirect,
}

/// The class of the element `(s, theta)`: its order as an automorphism, when finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementClassDescriptor {
    pub order: Option<u64>,
}

/// The dual group as a block diagonal product of classical groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockGroupModel {
    pub blocks: Vec<MatrixGroupModel>,
}

impl BlockGroupModel {
    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.lie_algebra_dimension()).sum()
    }

    /// Lie algebra membership: block diagonal with each block in its factor.
    pub fn lie_algebra_contains(&self, x: &CycloMatrix) -> bool {
        let Some(xr) = x.to_rat() else { return false };
        let mut off = 0;
        let mut offs = Vec::new();
        for b in &self.blocks {
            offs.push((off, b.n));
            off += b.n;
        }
        if off != x.rows() {
            return false;
        }
        for i in 0..off {
            for j in 0..off {
                let same = offs.iter().any(|&(o, n)| (o..o + n).contains(&i) && (o..o + n).contains(&j));
                if !same && !num_traits::Zero::is_zero(&xr[(i, j)]) {
                    return false;
                }
            }
        }
        self.blocks.iter().zip(&offs).all(|(b, &(o, n))| {
            let idx: Vec<usize> = (o..o + n).collect();
            b.lie_algebra_contains(&xr.submatrix(&idx, &idx))
        })
    }
}

/// A twisted endoscopic datum for `(GL_N, theta)` of elliptic type `(N_O, N_S')`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwistedEndoDatum {
    pub n: usize,
    pub n_o: usize,
    pub n_s_prime: usize,
    pub s: CycloMatrix,
    pub dual_group: BlockGroupModel,
    pub gamma_form: GammaForm,
    pub element_class: ElementClassDescriptor,
}

/// Largest exponent tried when certifying finite order by powers.
pub const ORDER_SEARCH_BOUND: u64 = 720;

/// `J_{O,S}^{-1} J~`, the standard endoscopic element.
pub fn standard_element(n_o: usize, n_s: usize) -> Result<CycloMatrix> {
    let j = cyc(&j_os(n_o, n_s));
    Ok(&j.inverse().ok_or(Error::Singular)? * &cyc(&make_tilde_j(n_o + 2 * n_s)?))
}

pub fn make_endoscopic_datum(n: usize, n_o: usize, n_s_prime: usize) -> Result<TwistedEndoDatum> {
    if n_o + 2 * n_s_prime != n {
        return Err(Error::Dimension(format!(
            "N = {n} is not N_O + 2 N_S' = {n_o} + 2 * {n_s_prime}"
        )));
    }
    TwistedEndoDatum::with_element(n_o, n_s_prime, standard_element(n_o, n_s_prime)?)
}

/// The order of `Int(s) o theta` as an automorphism of `GL_N`, if at most `bound`.
/// Odd powers act by inversion on the center, so the order is `2j` with `(s theta(s))^j`
/// scalar.
pub fn twisted_order(s: &CycloMatrix, theta: &TwistingAutomorphismGL, bound: u64) -> Result<Option<u64>> {
    let g = s * &theta.apply(s)?;
    let mut p = g.clone();
    for j in 1..=bound / 2 {
        if is_scalar(&p) {
            return Ok(Some(2 * j));
        }
        p = &p * &g;
    }
    Ok(None)
}

impl TwistedEndoDatum {
    /// A datum of type `(N_O, N_S')` with a given element, validated.
    pub fn with_element(n_o: usize, n_s_prime: usize, s: CycloMatrix) -> Result<Self> {
        let n = n_o + 2 * n_s_prime;
        if s.rows() != n || s.cols() != n {
            return Err(Error::Dimension("element size differs from N".into()));
        }
        let theta = TwistingAutomorphismGL::new(n)?;
        let order = twisted_order(&s, &theta, ORDER_SEARCH_BOUND)?;
        let mut blocks = Vec::new();
        if n_o > 0 {
            blocks.push(MatrixGroupModel {
                kind: ClassicalKind::So,
                n: n_o,
                form: Some(antidiagonal(n_o)),
            });
        }
        if n_s_prime > 0 {
            blocks.push(MatrixGroupModel {
                kind: ClassicalKind::Sp,
                n: 2 * n_s_prime,
                form: Some(standard_twist_form(2 * n_s_prime)),
            });
        }
        let d = TwistedEndoDatum {
            n,
            n_o,
            n_s_prime,
            s,
            dual_group: BlockGroupModel { blocks },
            gamma_form: if n_o > 0 && n_o % 2 == 0 {
                GammaForm::Semidirect
            } else {
                GammaForm::Direct
            },
            element_class: ElementClassDescriptor { order },
        };
        d.validate()?;
        Ok(d)
    }

    pub fn theta(&self) -> TwistingAutomorphismGL {
        TwistingAutomorphismGL::new(self.n).expect("N is positive")
    }

    pub fn expected_dimension(&self) -> usize {
        self.n_o * self.n_o.saturating_sub(1) / 2 + self.n_s_prime * (2 * self.n_s_prime + 1)
    }

    pub fn fixed_algebra(&self) -> Result<FixedAlgebra> {
        fixed_point_subalgebra(&self.s, Some(&self.theta()))
    }

    pub fn is_semisimple(&self) -> Result<bool> {
        check_semisimplicity(&self.s, Some(&self.theta()))
    }

    /// Semisimplicity and the type `so_{N_O} + sp_{2N_S'}` of the fixed algebra, checked
    /// by dimension, bracket closure, center dimension and inclusion in the block model.
    pub fn validate(&self) -> Result<()> {
        if self.s.inverse().is_none() {
            return Err(Error::Singular);
        }
        if !self.is_semisimple()? {
            return Err(Error::InvalidDatum("(s, theta) is not semisimple".into()));
        }
        let f = self.fixed_algebra()?;
        let expected_center = usize::from(self.n_o == 2);
        if f.dimension != self.expected_dimension() || !f.bracket_closed || f.center_basis.len() != expected_center {
            return Err(Error::InvalidDatum(format!(
                "fixed algebra has dimension {} and center dimension {}, expected {} and {}",
                f.dimension,
                f.center_basis.len(),
                self.expected_dimension(),
                expected_center
            )));
        }
        Ok(())
    }

    /// Whether the fixed algebra is literally the Lie algebra of the block model.
    pub fn fixed_algebra_matches_model(&self) -> Result<bool> {
        let f = self.fixed_algebra()?;
        Ok(f.dimension == self.dual_group.dimension()
            && f.basis.iter().all(|x| self.dual_group.lie_algebra_contains(x)))
    }

    /// Whether `Ad(s) o dtheta` is the identity on every element of the fixed algebra.
    pub fn acts_trivially_on_fixed_algebra(&self) -> Result<bool> {
        let theta = self.theta();
        let si = self.s.inverse().ok_or(Error::Singular)?;
        let f = self.fixed_algebra()?;
        Ok(f
            .basis
            .iter()
            .all(|x| &(&(&self.s * &theta.differential(x)) * &si) == x))
    }
}

/// The result of normalizing `s` to finite order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteOrderReplacement {
    pub datum: TwistedEndoDatum,
    /// `(Int(s') o theta)^order` is the identity.
    pub order: u64,
    /// `(s' theta(s'))^(order/2)`, a scalar matrix.
    pub power_certificate: CycloMatrix,
    /// `z` with `s' = s z`, in the identity component of the center.
    pub central_shift: CycloMatrix,
    pub replaced: bool,
}

/// Keeps `s` when `Int(s) o theta` already has finite order. Otherwise replaces `s` by
/// the standard element of the same type and certifies that the quotient lies in the
/// identity component of the center of the dual group.
pub fn finite_order_replacement(d: &TwistedEndoDatum) -> Result<FiniteOrderReplacement> {
    let theta = d.theta();
    let certificate = |s: &CycloMatrix, k: u64| -> Result<CycloMatrix> {
        Ok((s * &theta.apply(s)?).pow(k / 2))
    };
    if let Some(k) = twisted_order(&d.s, &theta, ORDER_SEARCH_BOUND)? {
        return Ok(FiniteOrderReplacement {
            datum: d.clone(),
            order: k,
            power_certificate: certificate(&d.s, k)?,
            central_shift: CycloMatrix::identity(d.n),
            replaced: false,
        });
    }
    let s_std = standard_element(d.n_o, d.n_s_prime)?;
    let z = &s_std.inverse().ok_or(Error::Singular)? * &d.s;
    let zi = z.inverse().ok_or(Error::Singular)?;
    if !d.fixed_algebra()?.connected_center_contains(&zi)? {
        return Err(Error::NoCertificate(
            "element differs from the standard one by a non-central factor".into(),
        ));
    }
    let datum = TwistedEndoDatum::with_element(d.n_o, d.n_s_prime, s_std.clone())?;
    let k = datum
        .element_class
        .order
        .ok_or_else(|| Error::NoCertificate("standard element has no finite order".into()))?;
    Ok(FiniteOrderReplacement {
        power_certificate: certificate(&s_std, k)?,
        datum,
        order: k,
        central_shift: zi,
        replaced: true,
    })
}

/// Outcome of an equivalence search between two data.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Equivalence {
    /// `g s_1 theta(g)^{-1} = s_2 z` with `z` in the connected center of the second
    /// dual group, and `g` conjugating the first fixed algebra onto the second.
    Witness { g: CycloMatrix, central_shift: CycloMatrix },
    /// Separated by an invariant.
    Inequivalent { reason: String },
    /// No witness among the candidates tried; equivalence is not decided.
    NotFound { candidates_tried: usize },
}

/// Candidate conjugators: signed permutation matrices for `N <= 4`, and permutation
/// matrices together with signed diagonals beyond that.
pub fn candidate_conjugators(n: usize) -> Vec<CycloMatrix> {
    let mut out = vec![CycloMatrix::identity(n)];
    let perms = permutations(n);
    let signs: Vec<Vec<i64>> = (0..1u32 << n)
        .map(|m| (0..n).map(|i| if m >> i & 1 == 1 { -1 } else { 1 }).collect())
        .collect();
    let mono = |p: &[usize], sg: &[i64]| {
        let mut m = CycloMatrix::zeros(n, n);
        for i in 0..n {
            m[(p[i], i)] = Cyclotomic::from_i64(sg[i]);
        }
        m
    };
    let ident: Vec<usize> = (0..n).collect();
    let ones = vec![1i64; n];
    if n <= 4 {
        for p in &perms {
            for sg in &signs {
                out.push(mono(p, sg));
            }
        }
    } else {
        out.extend(perms.iter().map(|p| mono(p, &ones)));
        out.extend(signs.iter().map(|sg| mono(&ident, sg)));
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn data_equivalent(d1: &TwistedEndoDatum, d2: &TwistedEndoDatum) -> Result<Equivalence> {
    if d1.n != d2.n {
        return Err(Error::Incompatible("data for different N".into()));
    }
    let f1 = d1.fixed_algebra()?;
    let f2 = d2.fixed_algebra()?;
    if f1.dimension != f2.dimension {
        return Ok(Equivalence::Inequivalent {
            reason: format!("fixed algebra dimensions {} and {} differ", f1.dimension, f2.dimension),
        });
    }
    if f1.center_basis.len() != f2.center_basis.len() {
        return Ok(Equivalence::Inequivalent {
            reason: "fixed algebra centers differ in dimension".into(),
        });
    }
    let theta = d1.theta();
    let s2i = d2.s.inverse().ok_or(Error::Singular)?;
    let candidates = candidate_conjugators(d1.n);
    let tried = candidates.len();
    for g in candidates {
        let tg = theta.apply(&g)?;
        let shifted = &(&g * &d1.s) * &tg.inverse().ok_or(Error::Singular)?;
        let z = &s2i * &shifted;
        if f2.connected_center_contains(&z)? && f1.conjugate_equals(&g, &f2) {
            return Ok(Equivalence::Witness { g, central_shift: z });
        }
    }
    Ok(Equivalence::NotFound { candidates_tried: tried })
}

/// A factor of the endoscopic group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupFactor {
    pub kind: ClassicalKind,
    pub n: usize,
}

/// The quasi-split endoscopic group `H` attached to a datum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EndoGroupDescriptor {
    pub label: String,
    pub factors: Vec<GroupFactor>,
    pub root_datum: BasedRootDatum,
    pub dual_root_datum: BasedRootDatum,
    pub first_invariant: DatumAutomorphism,
    pub dual_first_invariant: DatumAutomorphism,
    pub first_invariants_compatible: bool,
    pub second_invariant_trivial: bool,
    pub whittaker_normalized: bool,
}

/// `SO_{N_O} x SO_{2N_S'+1}` for even `N_O`, `Sp_{N_O-1} x SO_{2N_S'+1}` for odd `N_O`;
/// trivial factors are dropped.
pub fn endoscopic_group(d: &TwistedEndoDatum) -> Result<EndoGroupDescriptor> {
    let m = d.n_s_prime;
    let (o_factor, o_dual) = if d.n_o % 2 == 0 {
        let k = d.n_o / 2;
        (GroupFactor { kind: ClassicalKind::So, n: d.n_o }, BasedRootDatum::so_even(k))
    } else {
        let k = (d.n_o - 1) / 2;
        (GroupFactor { kind: ClassicalKind::Sp, n: d.n_o - 1 }, BasedRootDatum::so_odd(k))
    };
    let s_factor = GroupFactor { kind: ClassicalKind::So, n: 2 * m + 1 };
    let dual_root_datum = BasedRootDatum::product(&o_dual, &BasedRootDatum::sp(m));
    let root_datum = dual_root_datum.dual();
    let factors: Vec<GroupFactor> = [o_factor, s_factor]
        .into_iter()
        .filter(|f| !matches!((f.kind, f.n), (ClassicalKind::Sp, 0) | (ClassicalKind::So, 0) | (ClassicalKind::So, 1)))
        .collect();
    let label = if factors.is_empty() {
        "1".to_string()
    } else {
        factors
            .iter()
            .map(|f| {
                let k = match f.kind {
                    ClassicalKind::So => "SO",
                    ClassicalKind::Sp => "Sp",
                    ClassicalKind::O => "O",
                    ClassicalKind::Gl => "GL",
                };
                format!("{k}({})", f.n)
            })
            .collect::<Vec<_>>()
            .join(" x ")
    };
    // The quasi-split form is normalized to be split with trivial second invariant.
    let dual_first_invariant = DatumAutomorphism::identity(&dual_root_datum);
    let first_invariant = dual_first_invariant.transfer();
    let rank = root_datum.rank;
    let second = ExtendedGroupInvariants::new(
        root_datum.clone(),
        ExtendedKind::RealForm,
        first_invariant.cocharacter_matrix(),
        vec![Rat::from_integer(BigInt::from(0)); rank],
    )?;
    Ok(EndoGroupDescriptor {
        label,
        factors,
        first_invariants_compatible: check_compatible(&first_invariant, &dual_first_invariant),
        second_invariant_trivial: second.second_invariant.iter().all(num_traits::Zero::is_zero),
        whittaker_normalized: d.theta().preserves_whittaker_datum(),
        root_datum,
        dual_root_datum,
        first_invariant,
        dual_first_invariant,
    })
}

/// One datum for each `(N_O, N_S')` with `N = N_O + 2N_S'`, by increasing `N_O`.
pub fn enumerate_elliptic_data(n: usize) -> Result<Vec<TwistedEndoDatum>> {
    if n == 0 {
        return Err(Error::Dimension("N must be positive".into()));
    }
    (0..=n)
        .filter(|n_o| (n - n_o) % 2 == 0)
        .map(|n_o| make_endoscopic_datum(n, n_o, (n - n_o) / 2))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilde_j_small() {
        assert_eq!(make_tilde_j(1).unwrap(), IntMatrix::from_i64(&[&[1]]));
        assert_eq!(make_tilde_j(2).unwrap(), IntMatrix::from_i64(&[&[0, 1], &[-1, 0]]));
        assert!(make_tilde_j(0).is_err());
    }

    #[test]
    fn split_sl2_element_is_identity() {
        let d = make_endoscopic_datum(2, 0, 1).unwrap();
        assert!(d.s.is_identity());
    }

    #[test]
    fn permutations_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(candidate_conjugators(2).len(), 1 + 2 * 4);
    }
}
