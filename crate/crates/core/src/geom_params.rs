//! Desk-scale models of geometric parameter spaces for general linear groups: canonical
//! flats, A- and L-parameters, parameter points, clans and their orbit tables, closure,
//! the twisting action on orbits and restriction along an endoscopic embedding.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::cyclotomic::{CycloMatrix, Cyclotomic};
use crate::endoscopy::TwistingAutomorphismGL;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rootdata::{ClassicalKind, MatrixGroupModel};
use crate::scalar::{rat, serde_exact, Field, Rat, Ring};

/// Eigenvalues of a semisimple element of `gl_N`, in coordinate order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfinitesimalCharacter {
    #[serde(with = "serde_exact::rat_vec")]
    pub lambda: Vec<Rat>,
}

impl InfinitesimalCharacter {
    pub fn new(lambda: Vec<Rat>) -> Self {
        InfinitesimalCharacter { lambda }
    }

    pub fn is_regular(&self) -> bool {
        let mut v = self.lambda.clone();
        v.sort();
        v.windows(2).all(|w| w[0] != w[1])
    }

    /// Coordinates grouped by the class of the eigenvalue modulo the integers, in order
    /// of first appearance.
    pub fn integral_classes(&self) -> Vec<Vec<usize>> {
        let mut classes: Vec<(Rat, Vec<usize>)> = Vec::new();
        for (i, l) in self.lambda.iter().enumerate() {
            let f = crate::scalar::frac(l);
            match classes.iter_mut().find(|(c, _)| *c == f) {
                Some((_, v)) => v.push(i),
                None => classes.push((f, vec![i])),
            }
        }
        classes.into_iter().map(|(_, v)| v).collect()
    }

    fn same_multiset(&self, other: &[Rat]) -> bool {
        let mut a = self.lambda.clone();
        let mut b = other.to_vec();
        a.sort();
        b.sort();
        a == b
    }
}

fn is_positive_integer(q: &Rat) -> bool {
    q.is_integer() && q.is_positive()
}

/// The canonical parabolic `P(lambda) = L(lambda) N(lambda)` of a diagonal `lambda`:
/// `L` centralizes `lambda`, `N` collects the positive integral eigenspaces of `ad(lambda)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatDescriptor {
    /// Coordinates with equal eigenvalue.
    pub levi_blocks: Vec<Vec<usize>>,
    /// Matrix units `E_{ij}` spanning the nilradical: `lambda_i - lambda_j` a positive integer.
    pub nilradical: Vec<(usize, usize)>,
    pub levi_dimension: usize,
    pub parabolic_dimension: usize,
    pub is_borel: bool,
    pub is_whole_group: bool,
}

/// Dimension of the subspace of the ambient Lie algebra supported on `allowed` entries.
fn supported_dimension(ambient: &MatrixGroupModel, allowed: &dyn Fn(usize, usize) -> bool) -> usize {
    let n = ambient.n;
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| allowed(i, j)).collect();
    match (&ambient.kind, &ambient.form) {
        (ClassicalKind::Gl, _) | (_, None) => cells.len(),
        (_, Some(f)) => {
            // X f + f X^T = 0, as linear equations on the allowed cells.
            let fr = f.to_rat();
            let mut rows: Vec<Vec<Rat>> = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    let row: Vec<Rat> = cells
                        .iter()
                        .map(|&(i, j)| {
                            let mut v = <Rat as Zero>::zero();
                            if i == a {
                                v += fr[(j, b)].clone();
                            }
                            if i == b {
                                v += fr[(a, j)].clone();
                            }
                            v
                        })
                        .collect();
                    rows.push(row);
                }
            }
            if cells.is_empty() {
                return 0;
            }
            let m = Matrix::from_rows(rows).expect("rectangular");
            cells.len() - m.rank()
        }
    }
}

fn ambient_rank(ambient: &MatrixGroupModel) -> usize {
    match ambient.kind {
        ClassicalKind::Gl => ambient.n,
        _ => ambient.n / 2,
    }
}

pub fn canonical_flat(lambda: &[Rat], ambient: &MatrixGroupModel) -> Result<FlatDescriptor> {
    let n = lambda.len();
    if n != ambient.n {
        return Err(Error::Dimension("lambda length differs from the ambient size".into()));
    }
    let mut levi_blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match levi_blocks.iter_mut().find(|b| lambda[b[0]] == lambda[i]) {
            Some(b) => b.push(i),
            None => levi_blocks.push(vec![i]),
        }
    }
    let nilradical: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| is_positive_integer(&(&lambda[i] - &lambda[j])))
        .collect();
    let levi = |i: usize, j: usize| lambda[i] == lambda[j];
    let parabolic = |i: usize, j: usize| {
        let d = &lambda[i] - &lambda[j];
        d.is_integer() && !d.is_negative()
    };
    let levi_dimension = supported_dimension(ambient, &levi);
    let parabolic_dimension = supported_dimension(ambient, &parabolic);
    let total = supported_dimension(ambient, &|_, _| true);
    let borel = (total + ambient_rank(ambient)) / 2;
    Ok(FlatDescriptor {
        levi_blocks,
        nilradical,
        levi_dimension,
        parabolic_dimension,
        is_borel: parabolic_dimension == borel,
        is_whole_group: parabolic_dimension == total,
    })
}

/// An irreducible representation of the Weil group of the reals with bounded image.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WeilSummand {
    /// The trivial or the sign character.
    Character { sign: bool },
    /// The two-dimensional representation with `z -> diag((z/zbar)^{k/2}, (z/zbar)^{-k/2})`.
    DiscreteSeries { k: u32 },
}

impl WeilSummand {
    pub fn dimension(&self) -> usize {
        match self {
            WeilSummand::Character { .. } => 1,
            WeilSummand::DiscreteSeries { .. } => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ASummand {
    pub weil: WeilSummand,
    pub sl2_dim: usize,
}

/// `psi` on `W_R x SL_2`, as a sum of tensor products.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AParameter {
    pub summands: Vec<ASummand>,
    pub target: String,
}

impl AParameter {
    pub fn dimension(&self) -> usize {
        self.summands.iter().map(|s| s.weil.dimension() * s.sl2_dim).sum()
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.summands {
            if s.sl2_dim == 0 {
                return Err(Error::InvalidDatum("SL_2 dimension must be positive".into()));
            }
            if let WeilSummand::DiscreteSeries { k: 0 } = s.weil {
                return Err(Error::InvalidDatum("discrete series parameter must be positive".into()));
            }
        }
        Ok(())
    }
}

/// A summand `w (x) |.|^shift` of an L-parameter, with `|z|` the norm `z zbar` on `C^x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LSummand {
    pub weil: WeilSummand,
    #[serde(with = "serde_exact::rat")]
    pub shift: Rat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LParameter {
    pub summands: Vec<LSummand>,
}

impl LParameter {
    pub fn dimension(&self) -> usize {
        self.summands.iter().map(|s| s.weil.dimension()).sum()
    }

    /// Holomorphic exponents: `phi(z) = z^lambda zbar^lambdabar` on `C^x`.
    pub fn lambda(&self) -> Vec<Rat> {
        let mut out = Vec::new();
        for s in &self.summands {
            match s.weil {
                WeilSummand::Character { .. } => out.push(s.shift.clone()),
                WeilSummand::DiscreteSeries { k } => {
                    let h = rat(k as i64, 2);
                    out.push(&s.shift + &h);
                    out.push(&s.shift - &h);
                }
            }
        }
        out
    }

    /// Antiholomorphic exponents.
    pub fn lambda_bar(&self) -> Vec<Rat> {
        let mut out = Vec::new();
        for s in &self.summands {
            match s.weil {
                WeilSummand::Character { .. } => out.push(s.shift.clone()),
                WeilSummand::DiscreteSeries { k } => {
                    let h = rat(k as i64, 2);
                    out.push(&s.shift - &h);
                    out.push(&s.shift + &h);
                }
            }
        }
        out
    }

    /// `phi(j)`, block diagonal.
    pub fn phi_j(&self) -> CycloMatrix {
        let n = self.dimension();
        let mut m = CycloMatrix::zeros(n, n);
        let mut o = 0;
        for s in &self.summands {
            match s.weil {
                WeilSummand::Character { sign } => {
                    m[(o, o)] = Cyclotomic::from_i64(if sign { -1 } else { 1 });
                    o += 1;
                }
                WeilSummand::DiscreteSeries { k } => {
                    m[(o, o + 1)] = Cyclotomic::from_i64(if k % 2 == 0 { 1 } else { -1 });
                    m[(o + 1, o)] = Cyclotomic::one();
                    o += 2;
                }
            }
        }
        m
    }
}

/// Each summand of SL_2-dimension `d` becomes `d` twists by `|.|^{(d-1)/2 - k}`,
/// `k = 0, ..., d - 1`.
pub fn a_to_l_parameter(psi: &AParameter) -> Result<LParameter> {
    psi.validate()?;
    let mut summands = Vec::new();
    for s in &psi.summands {
        let d = s.sl2_dim as i64;
        for k in 0..d {
            summands.push(LSummand {
                weil: s.weil.clone(),
                shift: rat(d - 1 - 2 * k, 2),
            });
        }
    }
    Ok(LParameter { summands })
}

/// A point `(y, F(lambda'))` with `y^2 = exp(2 pi i lambda')`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricParameterPoint {
    pub y: CycloMatrix,
    #[serde(with = "serde_exact::rat_vec")]
    pub flat_rep: Vec<Rat>,
}

impl GeometricParameterPoint {
    pub fn new(y: CycloMatrix, flat_rep: Vec<Rat>) -> Result<Self> {
        let p = GeometricParameterPoint { y, flat_rep };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.y.rows() != self.flat_rep.len() || !self.y.is_square() {
            return Err(Error::Dimension("y and lambda sizes differ".into()));
        }
        if &self.y * &self.y != CycloMatrix::exp_diag(&self.flat_rep) {
            return Err(Error::Constraint("y^2 differs from exp(2 pi i lambda)".into()));
        }
        Ok(())
    }
}

/// How a parameter point is normalized, as recorded in outputs.
pub const POINT_CONVENTION: &str = "y = exp(pi i lambda) phi(j) (-1)^(N-1)";

/// `exp(2 pi i rho)` for `GL_N`, the central element `(-1)^{N-1}`.
pub fn rho_shift(n: usize) -> Cyclotomic {
    Cyclotomic::from_i64(if n % 2 == 1 { 1 } else { -1 })
}

/// `lambda' = lambda` and `y = exp(pi i lambda) phi(j) exp(2 pi i rho)`. The central factor
/// reproduces `y = diag(-i, i)` for the unipotent GL_2 parameter; `y^2` is unchanged by it.
pub fn parameter_point(phi: &LParameter) -> Result<GeometricParameterPoint> {
    let lambda = phi.lambda();
    let half: Vec<Rat> = lambda.iter().map(|l| l / BigRational::from_integer(BigInt::from(2))).collect();
    let y = (&CycloMatrix::exp_diag(&half) * &phi.phi_j()).scale(&rho_shift(phi.dimension()));
    GeometricParameterPoint::new(y, lambda)
}

/// One symbol of a clan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClanSymbol {
    Plus,
    Minus,
    Pair(u8),
}

/// A clan: signs and a matching on the remaining positions, pairs numbered by first
/// occurrence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clan {
    pub symbols: Vec<ClanSymbol>,
}

impl Clan {
    pub fn new(symbols: Vec<ClanSymbol>) -> Result<Self> {
        let c = Clan { symbols }.renumbered();
        c.validate()?;
        Ok(c)
    }

    fn renumbered(self) -> Self {
        let mut map = BTreeMap::new();
        let mut next = 1u8;
        let symbols = self
            .symbols
            .iter()
            .map(|s| match s {
                ClanSymbol::Pair(k) => ClanSymbol::Pair(*map.entry(*k).or_insert_with(|| {
                    let v = next;
                    next += 1;
                    v
                })),
                other => *other,
            })
            .collect();
        Clan { symbols }
    }

    pub fn validate(&self) -> Result<()> {
        let mut counts = BTreeMap::new();
        for s in &self.symbols {
            if let ClanSymbol::Pair(k) = s {
                *counts.entry(*k).or_insert(0) += 1;
            }
        }
        if counts.values().any(|&c| c != 2) {
            return Err(Error::Parse("every pair index must occur exactly twice".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// `(p, q)`: plus signs and minus signs, each pair counting once in both.
    pub fn signature(&self) -> (usize, usize) {
        let plus = self.symbols.iter().filter(|s| **s == ClanSymbol::Plus).count();
        let minus = self.symbols.iter().filter(|s| **s == ClanSymbol::Minus).count();
        let pairs = (self.len() - plus - minus) / 2;
        (plus + pairs, minus + pairs)
    }

    /// Positions `(i, j)`, `i < j`, of each pair, ordered by opening.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut open: BTreeMap<u8, usize> = BTreeMap::new();
        let mut out = Vec::new();
        for (i, s) in self.symbols.iter().enumerate() {
            if let ClanSymbol::Pair(k) = s {
                match open.remove(k) {
                    Some(o) => out.push((o, i)),
                    None => {
                        open.insert(*k, i);
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Dimension of the orbit on the flag variety of `GL_{p+q}` under `GL_p x GL_q`:
    /// `dim K/B_K` plus, for each pair `(i, j)`, `j - i` minus the pairs nested strictly
    /// inside in the crossing sense `s < i < t < j`.
    pub fn dimension(&self) -> usize {
        let (p, q) = self.signature();
        let base = p * p.saturating_sub(1) / 2 + q * q.saturating_sub(1) / 2;
        let pairs = self.pairs();
        let extra: usize = pairs
            .iter()
            .map(|&(i, j)| {
                let crossing = pairs.iter().filter(|&&(s, t)| s < i && i < t && t < j).count();
                j - i - crossing
            })
            .sum();
        base + extra
    }

    /// Signs and completed pairs among the first `i` symbols.
    fn count_sign(&self, i: usize, sign: ClanSymbol) -> usize {
        let signs = self.symbols[..i].iter().filter(|s| **s == sign).count();
        signs + self.pairs().iter().filter(|&&(_, b)| b < i).count()
    }

    /// Pairs opened within the first `i` symbols and closed after the first `j`.
    fn count_spanning(&self, i: usize, j: usize) -> usize {
        self.pairs().iter().filter(|&&(a, b)| a < i && b >= j).count()
    }
}

impl fmt::Display for Clan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            match s {
                ClanSymbol::Plus => write!(f, "+")?,
                ClanSymbol::Minus => write!(f, "-")?,
                ClanSymbol::Pair(k) => write!(f, "{}", char::from_digit(*k as u32, 36).unwrap_or('?'))?,
            }
        }
        Ok(())
    }
}

impl FromStr for Clan {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '+' => Ok(ClanSymbol::Plus),
                '-' | '\u{2212}' => Ok(ClanSymbol::Minus),
                d => d
                    .to_digit(36)
                    .filter(|&k| k > 0)
                    .map(|k| ClanSymbol::Pair(k as u8))
                    .ok_or_else(|| Error::Parse(format!("bad clan symbol {d:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Clan::new(symbols)
    }
}

impl Serialize for Clan {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Clan {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All clans of signature `(p, q)`, in lexicographic order of symbols.
pub fn enumerate_clans(p: usize, q: usize) -> Vec<Clan> {
    fn go(plus: usize, minus: usize, open: &mut Vec<u8>, next: u8, cur: &mut Vec<ClanSymbol>, out: &mut Vec<Clan>) {
        if plus == 0 && minus == 0 && open.is_empty() {
            out.push(Clan { symbols: cur.clone() });
            return;
        }
        if plus > 0 {
            cur.push(ClanSymbol::Plus);
            go(plus - 1, minus, open, next, cur, out);
            cur.pop();
        }
        if minus > 0 {
            cur.push(ClanSymbol::Minus);
            go(plus, minus - 1, open, next, cur, out);
            cur.pop();
        }
        if plus > 0 && minus > 0 {
            cur.push(ClanSymbol::Pair(next));
            open.push(next);
            go(plus - 1, minus - 1, open, next + 1, cur, out);
            open.pop();
            cur.pop();
        }
        for idx in 0..open.len() {
            let k = open.remove(idx);
            cur.push(ClanSymbol::Pair(k));
            go(plus, minus, open, next, cur, out);
            cur.pop();
            open.insert(idx, k);
        }
    }
    let mut out = Vec::new();
    go(p, q, &mut Vec::new(), 1, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// `a <= b` in the closure order: `a` has at least as many signs of each kind among its
/// first `i` symbols and at most as many pairs spanning each cut `(i, j)`.
pub fn clan_leq(a: &Clan, b: &Clan) -> bool {
    if a.len() != b.len() || a.signature() != b.signature() {
        return false;
    }
    let n = a.len();
    for i in 1..=n {
        if a.count_sign(i, ClanSymbol::Plus) < b.count_sign(i, ClanSymbol::Plus)
            || a.count_sign(i, ClanSymbol::Minus) < b.count_sign(i, ClanSymbol::Minus)
        {
            return false;
        }
        for j in i + 1..=n {
            if a.count_spanning(i, j) > b.count_spanning(i, j) {
                return false;
            }
        }
    }
    true
}

/// Strict relations `(i, j)` with `clans[i] < clans[j]`.
pub fn closure_order(clans: &[Clan]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, a) in clans.iter().enumerate() {
        for (j, b) in clans.iter().enumerate() {
            if i != j && clan_leq(a, b) {
                out.push((i, j));
            }
        }
    }
    out
}

/// The clan of a complete flag, given by the columns of an invertible matrix, relative
/// to the coordinate split `V_+ + V_-` with `plus[k]` marking coordinates of `V_+`.
pub fn classify_flag<F: Field>(flag: &Matrix<F>, plus: &[bool]) -> Result<Clan> {
    let n = flag.rows();
    if flag.cols() != n || plus.len() != n {
        return Err(Error::Dimension("flag and split sizes differ".into()));
    }
    if flag.rank() != n {
        return Err(Error::Singular);
    }
    let plus_rows: Vec<usize> = (0..n).filter(|&k| plus[k]).collect();
    let minus_rows: Vec<usize> = (0..n).filter(|&k| !plus[k]).collect();
    let prefix = |i: usize| flag.submatrix(&(0..n).collect::<Vec<_>>(), &(0..i).collect::<Vec<_>>());
    let rank_rows = |m: &Matrix<F>, rows: &[usize]| -> usize {
        if rows.is_empty() || m.cols() == 0 {
            0
        } else {
            m.submatrix(rows, &(0..m.cols()).collect::<Vec<_>>()).rank()
        }
    };
    // Basis of F_i meet the coordinate subspace where `rows` vanish.
    let meet = |m: &Matrix<F>, rows: &[usize]| -> Vec<Vec<F>> {
        if m.cols() == 0 {
            return Vec::new();
        }
        let coeffs = if rows.is_empty() {
            (0..m.cols()).map(|k| crate::matrix::unit::<F>(m.cols(), k)).collect()
        } else {
            m.submatrix(rows, &(0..m.cols()).collect::<Vec<_>>()).kernel()
        };
        coeffs.iter().map(|c| m.mul_vec(c)).collect()
    };
    let mut a = vec![0usize; n + 1];
    let mut b = vec![0usize; n + 1];
    let mut w: Vec<Vec<Vec<F>>> = vec![Vec::new(); n + 1];
    for i in 1..=n {
        let fi = prefix(i);
        a[i] = i - rank_rows(&fi, &minus_rows);
        b[i] = i - rank_rows(&fi, &plus_rows);
        let mut wi = meet(&fi, &minus_rows);
        wi.extend(meet(&fi, &plus_rows));
        w[i] = wi;
    }
    // spanning(i, j): pairs opened in the first i positions, still open after j.
    let spanning = |i: usize, j: usize| -> usize {
        if i == 0 {
            return 0;
        }
        let fi = prefix(i);
        let mut cols = fi.to_cols();
        cols.extend(w[j].iter().cloned());
        let sum = Matrix::from_cols(n, &cols).expect("lengths").rank();
        let meet_dim = i + w[j].len() - sum;
        i - meet_dim
    };
    let mut symbols = vec![ClanSymbol::Plus; n];
    let mut opens = Vec::new();
    let mut closes = Vec::new();
    for k in 1..=n {
        match (a[k] - a[k - 1], b[k] - b[k - 1]) {
            (1, 0) => symbols[k - 1] = ClanSymbol::Plus,
            (0, 1) => symbols[k - 1] = ClanSymbol::Minus,
            (0, 0) => opens.push(k),
            (1, 1) => closes.push(k),
            _ => return Err(Error::Constraint("inconsistent intersection dimensions".into())),
        }
    }
    if opens.len() != closes.len() {
        return Err(Error::Constraint("unmatched pair symbols".into()));
    }
    let mut partner: BTreeMap<usize, usize> = BTreeMap::new();
    for &j in &closes {
        let o = (1..j)
            .find(|&i| spanning(i, j - 1) - spanning(i, j) == 1)
            .ok_or_else(|| Error::Constraint("pair has no opening".into()))?;
        if !opens.contains(&o) || partner.insert(o, j).is_some() {
            return Err(Error::Constraint("pair matching is not a bijection".into()));
        }
    }
    for (idx, (o, c)) in partner.iter().enumerate() {
        let k = ClanSymbol::Pair(idx as u8 + 1);
        symbols[o - 1] = k;
        symbols[c - 1] = k;
    }
    Clan::new(symbols)
}

/// A flag in the orbit of `clan`: `+` and `-` take the next unused basis vector of
/// `V_+` or `V_-`, a pair opens with `e_a + e_b` and closes with `e_a`.
pub fn representative_flag<F: Field>(clan: &Clan, plus: &[bool]) -> Result<Matrix<F>> {
    let n = clan.len();
    if plus.len() != n {
        return Err(Error::Dimension("clan and split sizes differ".into()));
    }
    let p_count = plus.iter().filter(|&&x| x).count();
    if clan.signature() != (p_count, n - p_count) {
        return Err(Error::Incompatible("clan signature differs from the split".into()));
    }
    let mut pluses = (0..n).filter(|&k| plus[k]);
    let mut minuses = (0..n).filter(|&k| !plus[k]);
    let mut reserved: BTreeMap<u8, usize> = BTreeMap::new();
    let mut cols = Vec::with_capacity(n);
    for s in &clan.symbols {
        let mut v = vec![F::zero(); n];
        match s {
            ClanSymbol::Plus => v[pluses.next().expect("count")] = F::one(),
            ClanSymbol::Minus => v[minuses.next().expect("count")] = F::one(),
            ClanSymbol::Pair(k) => match reserved.remove(k) {
                Some(a) => v[a] = F::one(),
                None => {
                    let a = pluses.next().expect("count");
                    let b = minuses.next().expect("count");
                    v[a] = F::one();
                    v[b] = F::one();
                    reserved.insert(*k, a);
                }
            },
        }
        cols.push(v);
    }
    Matrix::from_cols(n, &cols)
}

/// Splits `y` on the block `coords` into its two eigenspaces. The first eigenvalue is the
/// one on the first coordinate vector when that is an eigenvector, and `exp(pi i lambda)`
/// otherwise.
fn eigen_block(y: &CycloMatrix, coords: Vec<usize>, lambda: &[Rat]) -> Result<TableBlock> {
    let n = y.rows();
    let outside: Vec<usize> = (0..n).filter(|k| !coords.contains(k)).collect();
    if !outside.is_empty() && !y.submatrix(&outside, &coords).is_zero() {
        return Err(Error::Unsupported("y does not preserve an integral block".into()));
    }
    let yb = y.submatrix(&coords, &coords);
    let k = coords.len();
    let first_is_eigen = (1..k).all(|i| Ring::is_zero(&yb[(i, 0)]));
    let c = if first_is_eigen {
        yb[(0, 0)].clone()
    } else {
        Cyclotomic::exp_2pi_i(&(&lambda[coords[0]] / BigRational::from_integer(BigInt::from(2))))
    };
    let shifted = |e: &Cyclotomic| &yb - &CycloMatrix::identity(k).scale(e);
    let plus_space = shifted(&c).kernel();
    let minus_space = shifted(&-c.clone()).kernel();
    if plus_space.len() + minus_space.len() != k {
        return Err(Error::Unsupported("y is not an involution up to scalar on a block".into()));
    }
    let plus = (0..k).map(|i| i < plus_space.len()).collect();
    let mut cols = plus_space;
    cols.extend(minus_space);
    Ok(TableBlock {
        coords,
        frame: Matrix::from_cols(k, &cols)?,
        plus,
    })
}

/// The group whose orbits are tabulated: `GL_n`, `SL_2`, or a block diagonal
/// `GL_{n_1} x ... x GL_{n_k}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Ambient {
    Gl { n: usize },
    Sl2,
    Levi { sizes: Vec<usize> },
}

impl Ambient {
    pub fn size(&self) -> usize {
        self.block_sizes().iter().sum()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        match self {
            Ambient::Gl { n } => vec![*n],
            Ambient::Sl2 => vec![2],
            Ambient::Levi { sizes } => sizes.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Ambient::Gl { n } => format!("GL({n})"),
            Ambient::Sl2 => "SL(2)".into(),
            Ambient::Levi { sizes } => sizes.iter().map(|n| format!("GL({n})")).collect::<Vec<_>>().join(" x "),
        }
    }

    pub fn model(&self) -> MatrixGroupModel {
        match self {
            Ambient::Sl2 => MatrixGroupModel {
                kind: ClassicalKind::Sp,
                n: 2,
                form: Some(crate::rootdata::standard_twist_form(2)),
            },
            _ => MatrixGroupModel::gl(self.size()),
        }
    }
}

/// A block of the table: coordinates sorted by decreasing eigenvalue, an eigenbasis of
/// `y` on them (columns, in block coordinates) and which columns span the first
/// eigenspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableBlock {
    pub coords: Vec<usize>,
    pub frame: CycloMatrix,
    pub plus: Vec<bool>,
}

impl TableBlock {
    pub fn signature(&self) -> (usize, usize) {
        let p = self.plus.iter().filter(|&&x| x).count();
        (p, self.plus.len() - p)
    }
}

/// Component group of the stabilizer of an orbit point; only the trivial group occurs
/// for the supported ambients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentGroup {
    pub order: u32,
}

impl ComponentGroup {
    pub fn trivial() -> Self {
        ComponentGroup { order: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitEntry {
    pub label: String,
    pub clans: Vec<Clan>,
    pub dimension: usize,
    pub component_group: ComponentGroup,
    pub sigma_image: String,
    /// Known smoothness of the closure; `None` when not decided.
    pub closure_smooth: Option<bool>,
}

/// Orbits of the centralizer of `y` on the variety of canonical flats for a regular
/// infinitesimal character, with closure order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitTable {
    pub ambient: Ambient,
    #[serde(with = "serde_exact::rat_vec")]
    pub lambda: Vec<Rat>,
    pub y: CycloMatrix,
    pub blocks: Vec<TableBlock>,
    pub orbits: Vec<OrbitEntry>,
    /// `(i, j)`: orbit `i` lies in the closure of orbit `j`, `i != j`.
    pub closure_pairs: Vec<(usize, usize)>,
    /// The orbit of the base point `(y, F(lambda))`.
    pub base_orbit: usize,
}

fn symbol_rank(s: &ClanSymbol) -> (u8, u8) {
    match s {
        ClanSymbol::Plus => (0, 0),
        ClanSymbol::Minus => (1, 0),
        ClanSymbol::Pair(k) => (2, *k),
    }
}

fn label_key(clans: &[Clan]) -> Vec<Vec<(u8, u8)>> {
    clans.iter().map(|c| c.symbols.iter().map(symbol_rank).collect()).collect()
}

pub fn build_orbit_table(lambda: &InfinitesimalCharacter, point: &GeometricParameterPoint, ambient: &Ambient) -> Result<OrbitTable> {
    point.validate()?;
    let n = ambient.size();
    if point.flat_rep.len() != n {
        return Err(Error::Dimension("parameter size differs from the ambient".into()));
    }
    if !lambda.same_multiset(&point.flat_rep) {
        return Err(Error::Incompatible("infinitesimal character differs from the parameter".into()));
    }
    let ic = InfinitesimalCharacter::new(point.flat_rep.clone());
    if !ic.is_regular() {
        return Err(Error::NonRegular("infinitesimal character is not regular".into()));
    }
    if *ambient == Ambient::Sl2 && point.y.det() != Cyclotomic::one() {
        return Err(Error::Incompatible("y is not in SL(2)".into()));
    }
    let y = &point.y;
    let mut blocks = Vec::new();
    let mut offset = 0;
    for size in ambient.block_sizes() {
        let levi: Vec<usize> = (offset..offset + size).collect();
        offset += size;
        for class in ic.integral_classes() {
            let mut coords: Vec<usize> = class.into_iter().filter(|c| levi.contains(c)).collect();
            if coords.is_empty() {
                continue;
            }
            coords.sort_by(|&i, &j| point.flat_rep[j].cmp(&point.flat_rep[i]));
            blocks.push(eigen_block(y, coords, &point.flat_rep)?);
        }
    }
    let per_block: Vec<Vec<Clan>> = blocks
        .iter()
        .map(|b| {
            let (p, q) = b.signature();
            enumerate_clans(p, q)
        })
        .collect();
    let mut combos: Vec<Vec<Clan>> = vec![Vec::new()];
    for options in &per_block {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                options.iter().map(move |o| {
                    let mut v = c.clone();
                    v.push(o.clone());
                    v
                })
            })
            .collect();
    }
    combos.sort_by(|a, b| {
        let da: usize = a.iter().map(Clan::dimension).sum();
        let db: usize = b.iter().map(Clan::dimension).sum();
        (da, label_key(a)).cmp(&(db, label_key(b)))
    });
    let leq = |a: &[Clan], b: &[Clan]| a.iter().zip(b).all(|(x, y)| clan_leq(x, y));
    let mut closure_pairs = Vec::new();
    for i in 0..combos.len() {
        for j in 0..combos.len() {
            if i != j && leq(&combos[i], &combos[j]) {
                closure_pairs.push((i, j));
            }
        }
    }
    let orbits: Vec<OrbitEntry> = combos
        .iter()
        .map(|clans| {
            let label = clans.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("|");
            // A product of closures is smooth when every factor is a point-orbit closure
            // (closed) or the whole flag variety of its block (dense).
            let smooth = clans.iter().all(|c| {
                let n = c.len();
                c.pairs().is_empty() || c.dimension() == n * n.saturating_sub(1) / 2
            });
            OrbitEntry {
                sigma_image: label.clone(),
                label,
                dimension: clans.iter().map(Clan::dimension).sum(),
                clans: clans.clone(),
                component_group: ComponentGroup::trivial(),
                closure_smooth: if smooth { Some(true) } else { None },
            }
        })
        .collect();
    let mut table = OrbitTable {
        ambient: ambient.clone(),
        lambda: point.flat_rep.clone(),
        y: y.clone(),
        blocks,
        orbits,
        closure_pairs,
        base_orbit: 0,
    };
    table.base_orbit = table.classify_point(&CycloMatrix::identity(n))?;
    Ok(table)
}

impl OrbitTable {
    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.orbits.iter().position(|o| o.label == label)
    }

    pub fn in_closure(&self, i: usize, j: usize) -> bool {
        i == j || self.closure_pairs.contains(&(i, j))
    }

    /// Orbits in the closure of orbit `j`, including `j`.
    pub fn closure_of(&self, j: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.in_closure(i, j)).collect()
    }

    pub fn dense_orbits(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| !self.closure_pairs.iter().any(|&(a, _)| a == j))
            .collect()
    }

    /// The orbit of the point `(y, F(Ad(g) lambda))`, for `g` commuting with `y^2`.
    pub fn classify_point(&self, g: &CycloMatrix) -> Result<usize> {
        let n = self.lambda.len();
        if g.rows() != n || g.cols() != n {
            return Err(Error::Dimension("point size differs from the table".into()));
        }
        let y2 = CycloMatrix::exp_diag(&self.lambda);
        if &(g * &y2) != &(&y2 * g) {
            return Err(Error::Constraint("point does not fix exp(2 pi i lambda)".into()));
        }
        let mut clans = Vec::new();
        for b in &self.blocks {
            let outside: Vec<usize> = (0..n).filter(|k| !b.coords.contains(k)).collect();
            if !outside.is_empty() && !g.submatrix(&outside, &b.coords).is_zero() {
                return Err(Error::Constraint("point does not preserve the table blocks".into()));
            }
            let frame_inv = b.frame.inverse().ok_or(Error::Singular)?;
            let local = &frame_inv * &g.submatrix(&b.coords, &b.coords);
            clans.push(classify_flag(&local, &b.plus)?);
        }
        let label = clans.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("|");
        self.index_of(&label)
            .ok_or_else(|| Error::MissingEntry(format!("orbit {label}")))
    }

    /// A point in orbit `i`: block diagonal, built from representative flags.
    pub fn representative_point(&self, i: usize) -> Result<CycloMatrix> {
        let n = self.lambda.len();
        let mut g = CycloMatrix::zeros(n, n);
        for (b, clan) in self.blocks.iter().zip(&self.orbits[i].clans) {
            let local = &b.frame * &representative_flag::<Cyclotomic>(clan, &b.plus)?;
            for (li, &gi) in b.coords.iter().enumerate() {
                for (lj, &gj) in b.coords.iter().enumerate() {
                    g[(gi, gj)] = local[(li, lj)].clone();
                }
            }
        }
        Ok(g)
    }

    /// Key for caching: a digest of the defining inputs and the twisting data.
    pub fn cache_key(ambient: &Ambient, point: &GeometricParameterPoint, sigma: Option<&CycloMatrix>) -> String {
        let v = serde_json::json!({
            "ambient": ambient,
            "point": point,
            "sigma": sigma,
        });
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }
}

/// The permutation `w` with `Ad(w) lambda = mu` for diagonal data, as a matrix.
pub fn weyl_element(lambda: &[Rat], mu: &[Rat]) -> Result<CycloMatrix> {
    let n = lambda.len();
    let mut w = CycloMatrix::zeros(n, n);
    let mut used = vec![false; n];
    for (i, l) in lambda.iter().enumerate() {
        let t = (0..n)
            .find(|&k| !used[k] && mu[k] == *l)
            .ok_or_else(|| Error::Incompatible("infinitesimal characters are not conjugate".into()))?;
        used[t] = true;
        w[(t, i)] = Cyclotomic::one();
    }
    Ok(w)
}

/// The action of `sigma = Int(s) o theta` on the orbits, computed on representatives:
/// `(y, F(Ad(g) lambda))` goes to `(sigma(y), F(Ad(sigma(g) w) lambda))` with `w` a Weyl
/// element carrying `lambda` to `dsigma(lambda)`. `theta = None` is the identity.
pub fn sigma_action(table: &OrbitTable, s: &CycloMatrix, theta: Option<&TwistingAutomorphismGL>) -> Result<Vec<usize>> {
    let n = table.lambda.len();
    let si = s.inverse().ok_or(Error::Singular)?;
    let sigma = |x: &CycloMatrix| -> Result<CycloMatrix> {
        let t = match theta {
            Some(t) => t.apply(x)?,
            None => x.clone(),
        };
        Ok(&(s * &t) * &si)
    };
    if sigma(&table.y)? != table.y {
        return Err(Error::NotPreserved("sigma does not fix y".into()));
    }
    let lam: Vec<Cyclotomic> = table.lambda.iter().map(|q| Cyclotomic::from_rat(q.clone())).collect();
    let lam_m = CycloMatrix::diag(&lam);
    let dl = match theta {
        Some(t) => &(s * &t.differential(&lam_m)) * &si,
        None => &(s * &lam_m) * &si,
    };
    if !dl.is_diagonal() {
        return Err(Error::Unsupported("dsigma(lambda) is not diagonal".into()));
    }
    let mu: Vec<Rat> = dl
        .diagonal()
        .iter()
        .map(|x| x.as_rational().ok_or_else(|| Error::Unsupported("irrational eigenvalue".into())))
        .collect::<Result<_>>()?;
    let w = weyl_element(&table.lambda, &mu)?;
    let mut perm = Vec::with_capacity(table.len());
    for i in 0..table.len() {
        let g = table.representative_point(i)?;
        let image = &sigma(&g)? * &w;
        if image.rows() != n {
            return Err(Error::Dimension("image size".into()));
        }
        perm.push(table.classify_point(&image)?);
    }
    let mut seen = perm.clone();
    seen.sort();
    seen.dedup();
    if seen.len() != perm.len() {
        return Err(Error::Constraint("sigma does not permute the orbits".into()));
    }
    Ok(perm)
}

/// Records a permutation as the sigma images of a table.
pub fn apply_sigma(table: &mut OrbitTable, perm: &[usize]) {
    let labels: Vec<String> = table.orbits.iter().map(|o| o.label.clone()).collect();
    for (o, &j) in table.orbits.iter_mut().zip(perm) {
        o.sigma_image = labels[j].clone();
    }
}

/// Whether a permutation preserves dimensions and the closure order in both directions.
pub fn is_closure_automorphism(table: &OrbitTable, perm: &[usize]) -> bool {
    perm.len() == table.len()
        && (0..table.len()).all(|i| table.orbits[i].dimension == table.orbits[perm[i]].dimension)
        && (0..table.len()).all(|i| (0..table.len()).all(|j| table.in_closure(i, j) == table.in_closure(perm[i], perm[j])))
}

/// The orbit map of `X(epsilon)` for an embedding of the smaller group as a subgroup of
/// matrices of the same size: each orbit goes to the orbit of the image of a
/// representative.
pub fn restriction_orbit_map(h_table: &OrbitTable, g_table: &OrbitTable) -> Result<Vec<usize>> {
    if h_table.lambda.len() != g_table.lambda.len() {
        return Err(Error::Dimension("tables for different sizes".into()));
    }
    if h_table.y != g_table.y {
        return Err(Error::Incompatible("y differs between the tables".into()));
    }
    let w = weyl_element(&h_table.lambda, &g_table.lambda)?;
    (0..h_table.len())
        .map(|i| {
            let g = h_table.representative_point(i)?;
            g_table.classify_point(&(&g * &w.transpose()))
        })
        .collect()
}

/// Number of clans of signature `(p, q)`.
pub fn clan_count(p: usize, q: usize) -> usize {
    enumerate_clans(p, q).len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clan_parse_roundtrip() {
        let c: Clan = "1+-1".parse().unwrap();
        assert_eq!(c.to_string(), "1+-1");
        assert_eq!(c.signature(), (2, 2));
        assert!("1+-".parse::<Clan>().is_err());
        assert_eq!("2+2".parse::<Clan>().unwrap().to_string(), "1+1");
    }

    #[test]
    fn small_counts() {
        assert_eq!(clan_count(1, 1), 3);
        assert_eq!(clan_count(1, 0), 1);
        assert_eq!(clan_count(0, 0), 1);
    }
}
