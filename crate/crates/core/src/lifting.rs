//! Twisted characters and twisted sheaf classes with coefficients in the group ring of
//! the `m`-th roots of unity: pairings, the constructible decomposition, canonical
//! normalizations, microlocal virtual characters, the lifting identity and A-packets.
//!
//! Representations and perverse sheaves are formal labels. A twisted object carries a
//! coefficient recording its automorphism relative to a canonical one.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cyclotomic::{CycloMatrix, Cyclotomic};
use crate::endoscopy::{make_endoscopic_datum, twisted_order, TwistingAutomorphismGL, ORDER_SEARCH_BOUND};
use crate::error::{Error, Result};
use crate::geom_params::{
    a_to_l_parameter, build_orbit_table, parameter_point, restriction_orbit_map, sigma_action, weyl_element, AParameter, ASummand,
    Ambient, InfinitesimalCharacter, OrbitTable, WeilSummand,
};
use crate::matrix::{IntMatrix, Matrix};
use crate::scalar::{serde_exact, Int};

/// Sign rule of the pairing between irreducible characters and perverse sheaves.
pub const PAIRING_SIGN_CONVENTION: &str = "<pi(xi'), P(xi)> = e(xi) (-1)^dim S_xi delta(xi, xi')";

/// The group ring `Z[U_m]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootOfUnityRing {
    pub m: u32,
}

impl RootOfUnityRing {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidDatum("order of the root of unity group must be positive".into()));
        }
        Ok(RootOfUnityRing { m })
    }

    pub fn zero(&self) -> ZetaSum {
        ZetaSum {
            m: self.m,
            coeffs: vec![Int::zero(); self.m as usize],
        }
    }

    pub fn from_int(&self, v: &Int) -> ZetaSum {
        let mut z = self.zero();
        z.coeffs[0] = v.clone();
        z
    }

    pub fn one(&self) -> ZetaSum {
        self.from_int(&Int::one())
    }

    /// The basis element `zeta^k`.
    pub fn zeta(&self, k: i64) -> ZetaSum {
        let mut z = self.zero();
        z.coeffs[k.rem_euclid(self.m as i64) as usize] = Int::one();
        z
    }

    pub fn from_coeffs(&self, coeffs: &[i64]) -> ZetaSum {
        let mut z = self.zero();
        for (k, c) in coeffs.iter().enumerate() {
            z.coeffs[k % self.m as usize] += Int::from(*c);
        }
        z
    }
}

/// An element `sum_k c_k zeta^k` of `Z[U_m]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ZetaSum {
    m: u32,
    coeffs: Vec<Int>,
}

impl ZetaSum {
    pub fn ring(&self) -> RootOfUnityRing {
        RootOfUnityRing { m: self.m }
    }

    pub fn coeffs(&self) -> &[Int] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// The integer `c` when the element is `c zeta^0`.
    pub fn as_integer(&self) -> Option<Int> {
        self.coeffs[1..].iter().all(Zero::is_zero).then(|| self.coeffs[0].clone())
    }

    /// `k` when the element is the group element `zeta^k`.
    pub fn as_group_element(&self) -> Option<u32> {
        let nonzero: Vec<usize> = (0..self.coeffs.len()).filter(|&k| !self.coeffs[k].is_zero()).collect();
        (nonzero.len() == 1 && self.coeffs[nonzero[0]].is_one()).then(|| nonzero[0] as u32)
    }

    /// Image under `zeta -> exp(2 pi i / m)`.
    pub fn evaluate(&self) -> Cyclotomic {
        let mut acc = <Cyclotomic as crate::scalar::Ring>::zero();
        for (k, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                let term = Cyclotomic::root_of_unity(self.m as u64, k as i64) * Cyclotomic::from_rat(crate::scalar::rat_from_int(c));
                acc = acc + term;
            }
        }
        acc
    }

    pub fn scale(&self, c: &Int) -> ZetaSum {
        ZetaSum {
            m: self.m,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    fn check(&self, other: &ZetaSum) -> Result<()> {
        if self.m != other.m {
            return Err(Error::Incompatible(format!("coefficients over Z[U_{}] and Z[U_{}]", self.m, other.m)));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &ZetaSum) -> Result<ZetaSum> {
        self.check(other)?;
        Ok(ZetaSum {
            m: self.m,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn try_mul(&self, other: &ZetaSum) -> Result<ZetaSum> {
        self.check(other)?;
        let m = self.m as usize;
        let mut coeffs = vec![Int::zero(); m];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[(i + j) % m] += a * b;
            }
        }
        Ok(ZetaSum { m: self.m, coeffs })
    }
}

impl std::ops::Add for &ZetaSum {
    type Output = ZetaSum;
    /// Panics on different `m`; use [`ZetaSum::try_add`] for checked addition.
    fn add(self, o: &ZetaSum) -> ZetaSum {
        self.try_add(o).expect("same root of unity ring")
    }
}

impl std::ops::Mul for &ZetaSum {
    type Output = ZetaSum;
    fn mul(self, o: &ZetaSum) -> ZetaSum {
        self.try_mul(o).expect("same root of unity ring")
    }
}

impl std::ops::Neg for &ZetaSum {
    type Output = ZetaSum;
    fn neg(self) -> ZetaSum {
        self.scale(&Int::from(-1))
    }
}

impl fmt::Display for ZetaSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c.is_negative() { "-" } else { "+" })?;
            }
            first = false;
            match (k, mag.is_one()) {
                (0, _) => write!(f, "{mag}")?,
                (_, true) => write!(f, "z^{k}")?,
                (_, false) => write!(f, "{mag}*z^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ZetaSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (m = {})", self, self.m)
    }
}

#[derive(Serialize, Deserialize)]
struct ZetaSumRepr {
    m: u32,
    #[serde(with = "serde_exact::int_vec")]
    coeffs: Vec<Int>,
}

impl Serialize for ZetaSum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ZetaSumRepr {
            m: self.m,
            coeffs: self.coeffs.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ZetaSum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ZetaSumRepr::deserialize(d)?;
        if r.m == 0 || r.coeffs.len() != r.m as usize {
            return Err(serde::de::Error::custom("coefficient list must have length m >= 1"));
        }
        Ok(ZetaSum { m: r.m, coeffs: r.coeffs })
    }
}

/// Coefficients of formal combinations: integers for the untwisted theory and `Z[U_m]`
/// for the twisted one.
pub trait Coefficient: Clone + PartialEq + fmt::Debug + fmt::Display {
    fn zero_like(&self) -> Self;
    fn is_zero_coeff(&self) -> bool;
    fn plus(&self, other: &Self) -> Self;
    fn times_int(&self, c: &Int) -> Self;
    fn to_json(&self) -> serde_json::Value;
    fn from_json(v: &serde_json::Value) -> Result<Self>;
}

impl Coefficient for Int {
    fn zero_like(&self) -> Self {
        Int::zero()
    }
    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times_int(&self, c: &Int) -> Self {
        self * c
    }
    fn to_json(&self) -> serde_json::Value {
        serde_exact::int_to_json(self)
    }
    fn from_json(v: &serde_json::Value) -> Result<Self> {
        match v {
            serde_json::Value::Number(n) => n.as_i64().map(Int::from).ok_or_else(|| Error::Parse(format!("bad integer {n}"))),
            serde_json::Value::String(s) => s.parse().map_err(|_| Error::Parse(format!("bad integer {s:?}"))),
            other => Err(Error::Parse(format!("expected an integer, got {other}"))),
        }
    }
}

impl Coefficient for ZetaSum {
    fn zero_like(&self) -> Self {
        self.ring().zero()
    }
    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times_int(&self, c: &Int) -> Self {
        self.scale(c)
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serializable")
    }
    fn from_json(v: &serde_json::Value) -> Result<Self> {
        Ok(serde_json::from_value(v.clone())?)
    }
}

/// A complete geometric parameter `xi = (S, tau)` with its sign `e(xi)` and whether the
/// twisting automorphism fixes it. Identity and order use the orbit and `tau` only.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompleteParamLabel {
    pub orbit: String,
    pub tau: String,
    pub kottwitz_sign: i8,
    pub sigma_fixed: bool,
}

impl CompleteParamLabel {
    pub fn trivial(orbit: &str) -> Self {
        CompleteParamLabel {
            orbit: orbit.into(),
            tau: "1".into(),
            kottwitz_sign: 1,
            sigma_fixed: true,
        }
    }

    fn key(&self) -> (&str, &str) {
        (&self.orbit, &self.tau)
    }
}

impl PartialEq for CompleteParamLabel {
    fn eq(&self, o: &Self) -> bool {
        self.key() == o.key()
    }
}

impl Eq for CompleteParamLabel {}

impl PartialOrd for CompleteParamLabel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for CompleteParamLabel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.key().cmp(&o.key())
    }
}

impl fmt::Display for CompleteParamLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tau == "1" {
            write!(f, "{}", self.orbit)
        } else {
            write!(f, "{}/{}", self.orbit, self.tau)
        }
    }
}

/// One label per orbit (component groups are trivial), fixed by `sigma` when the orbit is.
pub fn labels_for(table: &OrbitTable, sigma: Option<&[usize]>) -> Vec<CompleteParamLabel> {
    table
        .orbits
        .iter()
        .enumerate()
        .map(|(i, o)| CompleteParamLabel {
            sigma_fixed: sigma.map_or(true, |p| p[i] == i),
            ..CompleteParamLabel::trivial(&o.label)
        })
        .collect()
}

/// A finite formal combination of labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Combination<C: Coefficient> {
    pub terms: BTreeMap<CompleteParamLabel, C>,
}

impl<C: Coefficient> Default for Combination<C> {
    fn default() -> Self {
        Combination { terms: BTreeMap::new() }
    }
}

impl<C: Coefficient> Combination<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(label: CompleteParamLabel, c: C) -> Self {
        let mut x = Self::new();
        x.add_term(label, c);
        x
    }

    /// Adds `c label`, dropping terms that cancel.
    pub fn add_term(&mut self, label: CompleteParamLabel, c: C) {
        let next = match self.terms.get(&label) {
            Some(prev) => prev.plus(&c),
            None => c,
        };
        if next.is_zero_coeff() {
            self.terms.remove(&label);
        } else {
            self.terms.insert(label, next);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, label: &CompleteParamLabel) -> Option<&C> {
        self.terms.get(label)
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (l, c) in &other.terms {
            out.add_term(l.clone(), c.clone());
        }
        out
    }
}

impl<C: Coefficient> Serialize for Combination<C> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(l, c)| serde_json::json!({ "label": l, "coefficient": c.to_json() }))
            .collect();
        v.serialize(s)
    }
}

impl<'de, C: Coefficient> Deserialize<'de> for Combination<C> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Term {
            label: CompleteParamLabel,
            coefficient: serde_json::Value,
        }
        let terms = Vec::<Term>::deserialize(d)?;
        let mut out = Combination::new();
        for t in terms {
            let c = C::from_json(&t.coefficient).map_err(serde::de::Error::custom)?;
            out.add_term(t.label, c);
        }
        Ok(out)
    }
}

/// Formal combination of irreducible representations `pi(xi)`.
pub type VirtualCharacter = Combination<Int>;

/// Formal combination of pairs `(pi(xi), zeta I_xi)`, with `I_xi` the canonical
/// intertwining operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistedVirtualCharacter {
    pub ring: RootOfUnityRing,
    pub terms: Combination<ZetaSum>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SheafBasis {
    /// Irreducible perverse sheaves `P(xi)`.
    Perverse,
    /// Extensions by zero `mu(xi)` of the local systems on orbits.
    Constructible,
}

/// An element of the Grothendieck group of equivariant sheaves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheafClass {
    pub basis: SheafBasis,
    pub terms: Combination<Int>,
}

/// An element of the twisted Grothendieck group, each `P(xi)` carried with its canonical
/// automorphism `sigma_xi` and a root-of-unity coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistedSheafClass {
    pub ring: RootOfUnityRing,
    pub basis: SheafBasis,
    pub terms: Combination<ZetaSum>,
}

/// Sign conventions in force; the pairing sign is the single point of change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    pub pairing_sign: i8,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions { pairing_sign: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChiProvenance {
    SmoothClosure,
    UserSupplied,
}

/// A row of the decomposition matrix: `chi(P(xi)) = sum_j entries[j] mu(xi_j)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChiRow {
    pub label: String,
    #[serde(with = "serde_exact::int_vec")]
    pub entries: Vec<Int>,
    pub provenance: ChiProvenance,
}

/// Decomposition of the irreducible perverse sheaves into constructible ones, rows and
/// columns in table order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChiMatrix {
    pub labels: Vec<String>,
    pub rows: Vec<ChiRow>,
}

/// `chi(P(xi)) = (-1)^{dim S} sum over orbits in the closure of S`, for `P(xi)` the shifted
/// constant sheaf on a smooth closure.
pub fn chi_row_smooth(xi: &CompleteParamLabel, table: &OrbitTable) -> Result<ChiRow> {
    let j = table
        .index_of(&xi.orbit)
        .ok_or_else(|| Error::MissingEntry(format!("orbit {}", xi.orbit)))?;
    if table.orbits[j].closure_smooth != Some(true) {
        return Err(Error::MissingEntry(format!("closure of {} is not known to be smooth; supply the row", xi.orbit)));
    }
    if xi.tau != "1" {
        return Err(Error::Unsupported("the smooth-closure rule needs the trivial local system".into()));
    }
    let sign = Int::from(if table.orbits[j].dimension % 2 == 0 { 1 } else { -1 });
    let entries = (0..table.len())
        .map(|i| if table.in_closure(i, j) { sign.clone() } else { Int::zero() })
        .collect();
    Ok(ChiRow {
        label: xi.orbit.clone(),
        entries,
        provenance: ChiProvenance::SmoothClosure,
    })
}

impl ChiMatrix {
    /// User rows take precedence; the remaining rows come from the smooth-closure rule.
    pub fn build(table: &OrbitTable, labels: &[CompleteParamLabel], user_rows: &[ChiRow]) -> Result<Self> {
        let mut rows = Vec::with_capacity(labels.len());
        for l in labels {
            match user_rows.iter().find(|r| r.label == l.orbit) {
                Some(r) => {
                    if r.entries.len() != labels.len() {
                        return Err(Error::Dimension(format!("row {} has the wrong length", r.label)));
                    }
                    rows.push(ChiRow {
                        provenance: ChiProvenance::UserSupplied,
                        ..r.clone()
                    });
                }
                None => rows.push(chi_row_smooth(l, table)?),
            }
        }
        let chi = ChiMatrix {
            labels: labels.iter().map(|l| l.orbit.clone()).collect(),
            rows,
        };
        chi.validate(table)?;
        Ok(chi)
    }

    pub fn matrix(&self) -> IntMatrix {
        Matrix::from_rows(self.rows.iter().map(|r| r.entries.clone()).collect()).expect("square")
    }

    pub fn determinant(&self) -> Int {
        self.matrix().det_ring()
    }

    pub fn entry(&self, row: usize, col: usize) -> &Int {
        &self.rows[row].entries[col]
    }

    /// Unit diagonal up to sign, support in the closure, and determinant `+-1`.
    pub fn validate(&self, table: &OrbitTable) -> Result<()> {
        let n = self.rows.len();
        for i in 0..n {
            if !self.entry(i, i).abs().is_one() {
                return Err(Error::Constraint(format!("diagonal entry of {} is not +-1", self.labels[i])));
            }
            for j in 0..n {
                if !self.entry(i, j).is_zero() && !table.in_closure(j, i) {
                    return Err(Error::Constraint(format!(
                        "{} has a constituent outside its closure",
                        self.labels[i]
                    )));
                }
            }
        }
        if !self.determinant().abs().is_one() {
            return Err(Error::Constraint("decomposition matrix is not unimodular".into()));
        }
        Ok(())
    }

    /// The inverse, an integer matrix since the determinant is a unit.
    pub fn inverse(&self) -> Result<IntMatrix> {
        let inv = self.matrix().to_rat().inverse().ok_or(Error::Singular)?;
        inv.to_int().ok_or_else(|| Error::Constraint("inverse is not integral".into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentElement {
    /// The identity of the component group.
    Identity,
    /// The canonical automorphism `sigma_xi`.
    Sigma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MicroProvenance {
    DiagonalRule,
    SmoothClosureRule,
    UserSupplied,
}

/// `tr tau^mic_S(P(xi))(element)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicrolocalEntry {
    pub orbit: String,
    pub param: String,
    pub element: ComponentElement,
    pub trace: ZetaSum,
    pub provenance: MicroProvenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicrolocalTable {
    pub entries: Vec<MicrolocalEntry>,
}

impl MicrolocalTable {
    /// Diagonal entries are one-dimensional with trace 1 at both elements (the canonical
    /// normalization). Off-diagonal entries vanish below a `P(xi)` with smooth support.
    pub fn from_rules(table: &OrbitTable, ring: RootOfUnityRing) -> Self {
        let mut entries = Vec::new();
        for (j, o) in table.orbits.iter().enumerate() {
            for element in [ComponentElement::Identity, ComponentElement::Sigma] {
                entries.push(MicrolocalEntry {
                    orbit: o.label.clone(),
                    param: o.label.clone(),
                    element,
                    trace: ring.one(),
                    provenance: MicroProvenance::DiagonalRule,
                });
                if o.closure_smooth == Some(true) {
                    for i in table.closure_of(j).into_iter().filter(|&i| i != j) {
                        entries.push(MicrolocalEntry {
                            orbit: table.orbits[i].label.clone(),
                            param: o.label.clone(),
                            element,
                            trace: ring.zero(),
                            provenance: MicroProvenance::SmoothClosureRule,
                        });
                    }
                }
            }
        }
        MicrolocalTable { entries }
    }

    /// Inserts or replaces entries, all marked user-supplied.
    pub fn with_user_entries(mut self, user: &[MicrolocalEntry]) -> Self {
        for u in user {
            self.entries
                .retain(|e| !(e.orbit == u.orbit && e.param == u.param && e.element == u.element));
            self.entries.push(MicrolocalEntry {
                provenance: MicroProvenance::UserSupplied,
                ..u.clone()
            });
        }
        self.entries.sort_by(|a, b| (&a.param, &a.orbit, a.element).cmp(&(&b.param, &b.orbit, b.element)));
        self
    }

    fn find(&self, orbit: &str, param: &str, element: ComponentElement) -> Option<&MicrolocalEntry> {
        self.entries
            .iter()
            .find(|e| e.orbit == orbit && e.param == param && e.element == element)
    }

    /// The trace at orbit `s` of the sheaf on orbit `xi`. Absent entries are zero when
    /// `s` lies outside the support of `P(xi)`, or when that support is smooth.
    pub fn trace(&self, table: &OrbitTable, ring: RootOfUnityRing, s: usize, xi: usize, element: ComponentElement) -> Result<ZetaSum> {
        let (so, xo) = (&table.orbits[s].label, &table.orbits[xi].label);
        if let Some(e) = self.find(so, xo, element) {
            if e.trace.ring() != ring {
                return Err(Error::Incompatible("microlocal entry over a different ring".into()));
            }
            return Ok(e.trace.clone());
        }
        if s == xi {
            return Err(Error::MissingEntry(format!("diagonal microlocal entry for {xo}")));
        }
        if !table.in_closure(s, xi) || table.orbits[xi].closure_smooth == Some(true) {
            return Ok(ring.zero());
        }
        Err(Error::MissingEntry(format!("microlocal entry at {so} for P({xo})")))
    }

    /// Diagonal entries present and nonzero.
    pub fn validate(&self, table: &OrbitTable) -> Result<()> {
        for o in &table.orbits {
            for element in [ComponentElement::Identity, ComponentElement::Sigma] {
                match self.find(&o.label, &o.label, element) {
                    Some(e) if !e.trace.is_zero() => {}
                    _ => return Err(Error::MissingEntry(format!("diagonal microlocal entry for {}", o.label))),
                }
            }
        }
        Ok(())
    }
}

/// Everything attached to one side: orbits, labels, decomposition and microlocal data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub table: OrbitTable,
    pub labels: Vec<CompleteParamLabel>,
    pub chi: ChiMatrix,
    pub mic: MicrolocalTable,
    pub ring: RootOfUnityRing,
    pub conventions: Conventions,
}

impl ParameterSpace {
    pub fn from_rules(table: OrbitTable, sigma: Option<&[usize]>, ring: RootOfUnityRing, conventions: Conventions) -> Result<Self> {
        Self::with_user_data(table, sigma, ring, conventions, &[], &[])
    }

    pub fn with_user_data(
        table: OrbitTable,
        sigma: Option<&[usize]>,
        ring: RootOfUnityRing,
        conventions: Conventions,
        chi_rows: &[ChiRow],
        mic_entries: &[MicrolocalEntry],
    ) -> Result<Self> {
        if let Some(p) = sigma {
            if p.len() != table.len() {
                return Err(Error::Dimension("sigma permutation length".into()));
            }
        }
        let labels = labels_for(&table, sigma);
        let chi = ChiMatrix::build(&table, &labels, chi_rows)?;
        let mic = MicrolocalTable::from_rules(&table, ring).with_user_entries(mic_entries);
        mic.validate(&table)?;
        Ok(ParameterSpace {
            table,
            labels,
            chi,
            mic,
            ring,
            conventions,
        })
    }

    pub fn index_of(&self, label: &CompleteParamLabel) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::MissingEntry(format!("label {label}")))
    }

    pub fn label_of_orbit(&self, orbit: &str) -> Result<&CompleteParamLabel> {
        self.labels
            .iter()
            .find(|l| l.orbit == orbit)
            .ok_or_else(|| Error::MissingEntry(format!("orbit {orbit}")))
    }

    fn dim(&self, i: usize) -> usize {
        self.table.orbits[i].dimension
    }

    fn parity(&self, a: usize, b: usize) -> Int {
        Int::from(if (self.dim(a) + self.dim(b)) % 2 == 0 { 1 } else { -1 })
    }

    /// The perverse basis element `P(xi)` with its canonical automorphism.
    pub fn twisted_basis(&self, i: usize) -> TwistedSheafClass {
        TwistedSheafClass {
            ring: self.ring,
            basis: SheafBasis::Perverse,
            terms: Combination::single(self.labels[i].clone(), self.ring.one()),
        }
    }

    pub fn basis(&self, i: usize) -> SheafClass {
        SheafClass {
            basis: SheafBasis::Perverse,
            terms: Combination::single(self.labels[i].clone(), Int::one()),
        }
    }
}

/// `e(xi) (-1)^{dim S_xi} delta`, times the convention sign.
pub fn pair_irreducibles(rep: &CompleteParamLabel, sheaf: &CompleteParamLabel, space: &ParameterSpace) -> Result<Int> {
    let i = space.index_of(rep)?;
    let j = space.index_of(sheaf)?;
    if i != j {
        return Ok(Int::zero());
    }
    let l = &space.labels[j];
    let mut v = Int::from(l.kottwitz_sign) * Int::from(space.conventions.pairing_sign);
    if space.dim(j) % 2 == 1 {
        v = -v;
    }
    Ok(v)
}

/// Rewrites a class in the perverse basis.
fn to_perverse<C: Coefficient>(terms: &Combination<C>, basis: SheafBasis, space: &ParameterSpace) -> Result<Combination<C>> {
    match basis {
        SheafBasis::Perverse => Ok(terms.clone()),
        SheafBasis::Constructible => {
            let inv = space.chi.inverse()?;
            let mut out = Combination::new();
            for (l, c) in &terms.terms {
                let a = space.index_of(l)?;
                for b in 0..space.labels.len() {
                    let k = &inv[(a, b)];
                    if !k.is_zero() {
                        out.add_term(space.labels[b].clone(), c.times_int(k));
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Rewrites a class in the constructible basis.
fn to_constructible<C: Coefficient>(terms: &Combination<C>, basis: SheafBasis, space: &ParameterSpace) -> Result<Combination<C>> {
    match basis {
        SheafBasis::Constructible => Ok(terms.clone()),
        SheafBasis::Perverse => {
            let mut out = Combination::new();
            for (l, c) in &terms.terms {
                let a = space.index_of(l)?;
                for b in 0..space.labels.len() {
                    let k = space.chi.entry(a, b);
                    if !k.is_zero() {
                        out.add_term(space.labels[b].clone(), c.times_int(k));
                    }
                }
            }
            Ok(out)
        }
    }
}

impl SheafClass {
    pub fn in_basis(&self, basis: SheafBasis, space: &ParameterSpace) -> Result<SheafClass> {
        let terms = match basis {
            SheafBasis::Perverse => to_perverse(&self.terms, self.basis, space)?,
            SheafBasis::Constructible => to_constructible(&self.terms, self.basis, space)?,
        };
        Ok(SheafClass { basis, terms })
    }
}

impl TwistedSheafClass {
    pub fn in_basis(&self, basis: SheafBasis, space: &ParameterSpace) -> Result<TwistedSheafClass> {
        let terms = match basis {
            SheafBasis::Perverse => to_perverse(&self.terms, self.basis, space)?,
            SheafBasis::Constructible => to_constructible(&self.terms, self.basis, space)?,
        };
        Ok(TwistedSheafClass {
            ring: self.ring,
            basis,
            terms,
        })
    }
}

fn pair_terms<C: Coefficient>(
    chars: &Combination<C>,
    sheaves: &Combination<C>,
    space: &ParameterSpace,
    mul: impl Fn(&C, &C) -> C,
    zero: C,
) -> Result<C> {
    let mut acc = zero;
    for (r, a) in &chars.terms {
        for (s, b) in &sheaves.terms {
            let p = pair_irreducibles(r, s, space)?;
            if !p.is_zero() {
                acc = acc.plus(&mul(a, b).times_int(&p));
            }
        }
    }
    Ok(acc)
}

/// The untwisted pairing, extended bilinearly.
pub fn pair(c: &VirtualCharacter, s: &SheafClass, space: &ParameterSpace) -> Result<Int> {
    let p = to_perverse(&s.terms, s.basis, space)?;
    pair_terms(c, &p, space, |a, b| a * b, Int::zero())
}

fn require_fixed<'a>(labels: impl IntoIterator<Item = &'a CompleteParamLabel>, space: &ParameterSpace) -> Result<()> {
    for l in labels {
        let i = space.index_of(l)?;
        if !space.labels[i].sigma_fixed {
            return Err(Error::NotSigmaFixed(l.to_string()));
        }
    }
    Ok(())
}

/// `<(pi(xi'), z' I), (P(xi), z sigma_xi)> = z' z <pi(xi'), P(xi)>`, extended bilinearly.
pub fn pair_twisted(c: &TwistedVirtualCharacter, s: &TwistedSheafClass, space: &ParameterSpace) -> Result<ZetaSum> {
    if c.ring != s.ring || c.ring != space.ring {
        return Err(Error::Incompatible("twisted pairing over different rings".into()));
    }
    require_fixed(c.terms.terms.keys(), space)?;
    require_fixed(s.terms.terms.keys(), space)?;
    let p = to_perverse(&s.terms, s.basis, space)?;
    pair_terms(&c.terms, &p, space, |a, b| a * b, space.ring.zero())
}

/// Records how a supplied automorphism of `P(xi)` compares with the canonical one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationCertificate {
    pub label: CompleteParamLabel,
    /// Scalar by which the supplied automorphism acts on the multiplicity-one
    /// constituent `mu(xi)`.
    pub supplied_trace: ZetaSum,
    /// Factor turning the supplied automorphism into the canonical one.
    pub rescaling: ZetaSum,
    pub is_canonical: bool,
}

/// The canonical `sigma_xi` acts by 1 on the constituent `mu(xi)`, which occurs once in
/// `chi(P(xi))`. `supplied_trace` is the scalar by which a given automorphism acts there.
pub fn canonical_sigma(xi: &CompleteParamLabel, space: &ParameterSpace, supplied_trace: &ZetaSum) -> Result<NormalizationCertificate> {
    let i = space.index_of(xi)?;
    if !space.labels[i].sigma_fixed {
        return Err(Error::NotSigmaFixed(xi.to_string()));
    }
    if !space.chi.entry(i, i).abs().is_one() {
        return Err(Error::Constraint(format!("mu({xi}) does not occur once in chi(P({xi}))")));
    }
    if supplied_trace.ring() != space.ring {
        return Err(Error::Incompatible("trace over a different ring".into()));
    }
    let k = supplied_trace
        .as_group_element()
        .ok_or_else(|| Error::Constraint("automorphism does not act by a root of unity".into()))?;
    Ok(NormalizationCertificate {
        label: space.labels[i].clone(),
        supplied_trace: supplied_trace.clone(),
        rescaling: space.ring.zeta(-(k as i64)),
        is_canonical: k == 0,
    })
}

fn orbit_index(space: &ParameterSpace, orbit: &str) -> Result<usize> {
    space
        .table
        .index_of(orbit)
        .ok_or_else(|| Error::MissingEntry(format!("orbit {orbit}")))
}

/// `sum_xi e(xi) (-1)^{dim S_xi - dim S} tr tau^mic_S(P(xi))(h) pi(xi)`, untwisted.
pub fn eta_mic(orbit: &str, space: &ParameterSpace, h: ComponentElement) -> Result<VirtualCharacter> {
    let s = orbit_index(space, orbit)?;
    let mut out = VirtualCharacter::new();
    for (xi, l) in space.labels.iter().enumerate() {
        let t = space.mic.trace(&space.table, space.ring, s, xi, h)?;
        let t = t
            .as_integer()
            .ok_or_else(|| Error::Incompatible(format!("trace at {l} is not an integer")))?;
        if !t.is_zero() {
            out.add_term(l.clone(), t * Int::from(l.kottwitz_sign) * space.parity(xi, s));
        }
    }
    Ok(out)
}

/// The same sum with `pi(xi) (x) 1` on a side where the twist acts trivially.
pub fn eta_mic_twisted_h(orbit: &str, space: &ParameterSpace, h: ComponentElement) -> Result<TwistedVirtualCharacter> {
    require_fixed(space.labels.iter(), space)?;
    let s = orbit_index(space, orbit)?;
    let mut terms = Combination::new();
    for (xi, l) in space.labels.iter().enumerate() {
        let t = space.mic.trace(&space.table, space.ring, s, xi, h)?;
        if !t.is_zero() {
            terms.add_term(l.clone(), t.scale(&(Int::from(l.kottwitz_sign) * space.parity(xi, s))));
        }
    }
    Ok(TwistedVirtualCharacter { ring: space.ring, terms })
}

/// Sum over fixed `xi` of `e(xi) (-1)^{dim S_xi - dim S'} tr tau^mic_{S'}(P(xi))(sigma_xi)
/// (pi(xi), I_xi)`; labels moved by the twist contribute nothing.
pub fn eta_mic_twisted_g(orbit: &str, space: &ParameterSpace) -> Result<TwistedVirtualCharacter> {
    let s = orbit_index(space, orbit)?;
    if !space.labels[s].sigma_fixed {
        return Err(Error::NotSigmaFixed(orbit.into()));
    }
    let mut terms = Combination::new();
    for (xi, l) in space.labels.iter().enumerate() {
        if !l.sigma_fixed {
            continue;
        }
        let t = space.mic.trace(&space.table, space.ring, s, xi, ComponentElement::Sigma)?;
        if !t.is_zero() {
            terms.add_term(l.clone(), t.scale(&(Int::from(l.kottwitz_sign) * space.parity(xi, s))));
        }
    }
    Ok(TwistedVirtualCharacter { ring: space.ring, terms })
}

/// Pullback of constructible classes: `mu(S')` goes to the sum of `mu(S_H)` over the
/// orbits mapping into `S'`.
fn restrict_terms<C: Coefficient>(
    terms: &Combination<C>,
    basis: SheafBasis,
    orbit_map: &[usize],
    g: &ParameterSpace,
    h: &ParameterSpace,
) -> Result<Combination<C>> {
    if orbit_map.len() != h.labels.len() {
        return Err(Error::Dimension("orbit map length differs from the smaller table".into()));
    }
    let mu = to_constructible(terms, basis, g)?;
    let mut pulled = Combination::new();
    for (l, c) in &mu.terms {
        let target = g.index_of(l)?;
        for (hi, &gi) in orbit_map.iter().enumerate() {
            if gi == target {
                pulled.add_term(h.labels[hi].clone(), c.clone());
            }
        }
    }
    to_perverse(&pulled, SheafBasis::Constructible, h)
}

pub fn restrict_untwisted(s: &SheafClass, orbit_map: &[usize], g: &ParameterSpace, h: &ParameterSpace) -> Result<SheafClass> {
    Ok(SheafClass {
        basis: SheafBasis::Perverse,
        terms: restrict_terms(&s.terms, s.basis, orbit_map, g, h)?,
    })
}

/// Restriction along the embedding on twisted classes, in the perverse basis.
pub fn restrict_sheaf_class(s: &TwistedSheafClass, orbit_map: &[usize], g: &ParameterSpace, h: &ParameterSpace) -> Result<TwistedSheafClass> {
    if s.ring != g.ring || s.ring != h.ring {
        return Err(Error::Incompatible("restriction over different rings".into()));
    }
    require_fixed(s.terms.terms.keys(), g)?;
    Ok(TwistedSheafClass {
        ring: s.ring,
        basis: SheafBasis::Perverse,
        terms: restrict_terms(&s.terms, s.basis, orbit_map, g, h)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftCheck {
    pub sheaf: CompleteParamLabel,
    pub g_side: ZetaSum,
    pub h_side: ZetaSum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftReport {
    pub checks: Vec<LiftCheck>,
    pub mismatches: Vec<CompleteParamLabel>,
}

impl LiftReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn g_vector(&self) -> Vec<ZetaSum> {
        self.checks.iter().map(|c| c.g_side.clone()).collect()
    }

    pub fn h_vector(&self) -> Vec<ZetaSum> {
        self.checks.iter().map(|c| c.h_side.clone()).collect()
    }
}

/// Checks `<eta_G, (P(xi), sigma_xi)> = <eta_H, restriction of (P(xi), sigma_xi)>` for
/// every fixed `xi` on the larger side.
pub fn lift_and_verify(
    eta_h: &TwistedVirtualCharacter,
    eta_g: &TwistedVirtualCharacter,
    g: &ParameterSpace,
    h: &ParameterSpace,
    orbit_map: &[usize],
) -> Result<LiftReport> {
    let mut checks = Vec::new();
    let mut mismatches = Vec::new();
    for (i, l) in g.labels.iter().enumerate() {
        if !l.sigma_fixed {
            continue;
        }
        let p = g.twisted_basis(i);
        let g_side = pair_twisted(eta_g, &p, g)?;
        let h_side = pair_twisted(eta_h, &restrict_sheaf_class(&p, orbit_map, g, h)?, h)?;
        if g_side != h_side {
            mismatches.push(l.clone());
        }
        checks.push(LiftCheck {
            sheaf: l.clone(),
            g_side,
            h_side,
        });
    }
    Ok(LiftReport { checks, mismatches })
}

/// The orbit of the point attached to an A-parameter in a table for the same `y`.
pub fn parameter_orbit(psi: &AParameter, table: &OrbitTable) -> Result<usize> {
    let point = parameter_point(&a_to_l_parameter(psi)?)?;
    if point.y != table.y {
        return Err(Error::Incompatible("the parameter's y differs from the table's".into()));
    }
    let w = weyl_element(&table.lambda, &point.flat_rep)?;
    table.classify_point(&w)
}

/// `{pi(xi) : tau^mic_{S_psi}(P(xi)) != 0}`.
pub fn a_packet(psi: &AParameter, space: &ParameterSpace) -> Result<Vec<CompleteParamLabel>> {
    let s = parameter_orbit(psi, &space.table)?;
    let mut out = Vec::new();
    for (xi, l) in space.labels.iter().enumerate() {
        if !space.mic.trace(&space.table, space.ring, s, xi, ComponentElement::Identity)?.is_zero() {
            out.push(l.clone());
        }
    }
    Ok(out)
}

/// `c (x) 1`: an untwisted combination read in the twisted group.
pub fn tensor_one(c: &VirtualCharacter, ring: RootOfUnityRing) -> TwistedVirtualCharacter {
    let mut terms = Combination::new();
    for (l, v) in &c.terms {
        terms.add_term(l.clone(), ring.from_int(v));
    }
    TwistedVirtualCharacter { ring, terms }
}

pub fn tensor_one_sheaf(c: &SheafClass, ring: RootOfUnityRing) -> TwistedSheafClass {
    let mut terms = Combination::new();
    for (l, v) in &c.terms.terms {
        terms.add_term(l.clone(), ring.from_int(v));
    }
    TwistedSheafClass {
        ring,
        basis: c.basis,
        terms,
    }
}

/// Order of `Int(s)`: the least `k` with `s^k` central.
pub fn inner_order(s: &CycloMatrix, bound: u64) -> Option<u64> {
    let n = s.rows();
    let mut p = s.clone();
    for k in 1..=bound {
        let c = p[(0, 0)].clone();
        if p == CycloMatrix::identity(n).scale(&c) {
            return Some(k);
        }
        p = &p * s;
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerationReport {
    pub m: u32,
    pub checks: Vec<NamedCheck>,
}

impl DegenerationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// With a trivial outer twist, runs the twisted and the untwisted pipelines on the same
/// data and compares: orbit action, microlocal characters on both sides, restriction of
/// every basis sheaf, all pairings, and canonical normalizations.
pub fn standard_endoscopy_degenerate(
    g_table: &OrbitTable,
    h_table: &OrbitTable,
    s: &CycloMatrix,
    chi_rows: (&[ChiRow], &[ChiRow]),
    mic_entries: (&[MicrolocalEntry], &[MicrolocalEntry]),
) -> Result<DegenerationReport> {
    let m = inner_order(s, ORDER_SEARCH_BOUND).ok_or_else(|| Error::Unsupported("Int(s) has no small finite order".into()))?;
    let ring = RootOfUnityRing::new(m as u32)?;
    let mut checks = Vec::new();
    let mut push = |name: String, passed: bool, detail: String| checks.push(NamedCheck { name, passed, detail });

    let perm_g = sigma_action(g_table, s, None)?;
    let perm_h = sigma_action(h_table, s, None)?;
    let id = |p: &[usize]| p.iter().enumerate().all(|(i, &j)| i == j);
    push("sigma acts trivially on orbits".into(), id(&perm_g) && id(&perm_h), format!("{perm_g:?} / {perm_h:?}"));

    let orbit_map = restriction_orbit_map(h_table, g_table)?;
    let conv = Conventions::default();
    let g = ParameterSpace::with_user_data(g_table.clone(), Some(&perm_g), ring, conv, chi_rows.0, mic_entries.0)?;
    let h = ParameterSpace::with_user_data(h_table.clone(), Some(&perm_h), ring, conv, chi_rows.1, mic_entries.1)?;

    let mut certs_ok = true;
    for space in [&g, &h] {
        for l in &space.labels {
            certs_ok &= canonical_sigma(l, space, &ring.one())?.is_canonical;
        }
    }
    push("canonical automorphisms are the identity".into(), certs_ok, String::new());

    for o in &h_table.orbits {
        let tw = eta_mic_twisted_h(&o.label, &h, ComponentElement::Sigma)?;
        let un = tensor_one(&eta_mic(&o.label, &h, ComponentElement::Identity)?, ring);
        push(format!("eta_H at {}", o.label), tw == un, String::new());
    }
    for o in &g_table.orbits {
        let tw = eta_mic_twisted_g(&o.label, &g)?;
        let un = tensor_one(&eta_mic(&o.label, &g, ComponentElement::Identity)?, ring);
        push(format!("eta_G at {}", o.label), tw == un, String::new());
    }
    for i in 0..g.labels.len() {
        let tw = restrict_sheaf_class(&g.twisted_basis(i), &orbit_map, &g, &h)?;
        let un = restrict_untwisted(&g.basis(i), &orbit_map, &g, &h)?;
        let un1 = tensor_one_sheaf(&un, ring);
        push(format!("restriction of P({})", g.labels[i]), tw == un1, String::new());
        for o in &h_table.orbits {
            let e_tw = eta_mic_twisted_h(&o.label, &h, ComponentElement::Sigma)?;
            let e_un = eta_mic(&o.label, &h, ComponentElement::Identity)?;
            let a = pair_twisted(&e_tw, &tw, &h)?;
            let b = pair(&e_un, &un, &h)?;
            push(
                format!("pairing eta_H({}) with P({})", o.label, g.labels[i]),
                a == ring.from_int(&b),
                format!("{a} vs {b}"),
            );
        }
    }
    Ok(DegenerationReport { m: m as u32, checks })
}

/// Deliberate defects for exercising the GL(2) checkpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gl2Mutation {
    /// Flips the pairing sign convention on both sides.
    SignFlip,
    /// Adds a nonzero microlocal entry at the closed orbit for the sheaf on the open orbit.
    OffDiagonal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gl2Report {
    pub checkpoints: Vec<NamedCheck>,
    pub g_orbits: Vec<(String, usize)>,
    pub h_orbits: Vec<(String, usize)>,
    pub sigma_order: u32,
    pub pairing_g: Vec<String>,
    pub pairing_h: Vec<String>,
    pub eta_h: Vec<(String, String)>,
    pub eta_g: Vec<(String, String)>,
    pub a_packet_g: Vec<String>,
    pub a_packet_h: Vec<String>,
    pub lift: LiftReport,
}

impl Gl2Report {
    pub fn passed(&self) -> bool {
        self.checkpoints.iter().all(|c| c.passed)
    }

    pub fn checkpoint(&self, name: &str) -> Option<&NamedCheck> {
        self.checkpoints.iter().find(|c| c.name == name)
    }
}

/// Checkpoint names of [`verify_gl2`].
pub const GL2_CHECKPOINTS: [&str; 6] = ["orbit tables", "eta_H", "eta_G", "pairing vectors", "A-packets", "lifting identity"];

/// The twisted datum of `GL(2)` with `Sp(2) = SL(2)` on the dual side and the unipotent
/// A-parameter, run end to end.
pub fn verify_gl2(mutation: Option<Gl2Mutation>) -> Result<Gl2Report> {
    let psi = AParameter {
        summands: vec![ASummand {
            weil: WeilSummand::Character { sign: false },
            sl2_dim: 2,
        }],
        target: "GL(2)".into(),
    };
    let point = parameter_point(&a_to_l_parameter(&psi)?)?;
    let ic = InfinitesimalCharacter::new(point.flat_rep.clone());
    let g_table = build_orbit_table(&ic, &point, &Ambient::Gl { n: 2 })?;
    let h_table = build_orbit_table(&ic, &point, &Ambient::Sl2)?;

    let datum = make_endoscopic_datum(2, 0, 1)?;
    let theta = TwistingAutomorphismGL::new(2)?;
    let m = twisted_order(&datum.s, &theta, ORDER_SEARCH_BOUND)?.ok_or_else(|| Error::Unsupported("twist of infinite order".into()))?;
    let ring = RootOfUnityRing::new(m as u32)?;
    let perm = sigma_action(&g_table, &datum.s, Some(&theta))?;
    let orbit_map = restriction_orbit_map(&h_table, &g_table)?;

    let conv = Conventions {
        pairing_sign: if mutation == Some(Gl2Mutation::SignFlip) { -1 } else { 1 },
    };
    let g_extra = match mutation {
        Some(Gl2Mutation::OffDiagonal) => vec![MicrolocalEntry {
            orbit: g_table.orbits[g_table.base_orbit].label.clone(),
            param: g_table.orbits[g_table.dense_orbits()[0]].label.clone(),
            element: ComponentElement::Sigma,
            trace: ring.one(),
            provenance: MicroProvenance::UserSupplied,
        }],
        _ => Vec::new(),
    };
    let g = ParameterSpace::with_user_data(g_table.clone(), Some(&perm), ring, conv, &[], &g_extra)?;
    let h = ParameterSpace::from_rules(h_table.clone(), None, ring, conv)?;

    let s_g = &g_table.orbits[parameter_orbit(&psi, &g_table)?].label;
    let psi_h = AParameter {
        target: "SL(2)".into(),
        ..psi.clone()
    };
    let s_h = &h_table.orbits[parameter_orbit(&psi_h, &h_table)?].label;
    let eta_h = eta_mic_twisted_h(s_h, &h, ComponentElement::Sigma)?;
    let eta_g = eta_mic_twisted_g(s_g, &g)?;
    let lift = lift_and_verify(&eta_h, &eta_g, &g, &h, &orbit_map)?;

    let trivial_g = g.labels[g_table.base_orbit].clone();
    let trivial_h = h.labels[h_table.base_orbit].clone();
    let name_g = |l: &CompleteParamLabel| if *l == trivial_g { "1_GL(2,R)".to_string() } else { format!("pi({l})") };
    let name_h = |l: &CompleteParamLabel| if *l == trivial_h { "1_PGL(2,R)".to_string() } else { format!("pi({l})") };
    let named = |e: &TwistedVirtualCharacter, f: &dyn Fn(&CompleteParamLabel) -> String| -> Vec<(String, String)> {
        e.terms.terms.iter().map(|(l, c)| (f(l), c.to_string())).collect()
    };
    let eta_h_named = named(&eta_h, &name_h);
    let eta_g_named = named(&eta_g, &name_g);
    let a_packet_g: Vec<String> = a_packet(&psi, &g)?.iter().map(name_g).collect();
    let a_packet_h: Vec<String> = a_packet(&psi_h, &h)?.iter().map(name_h).collect();

    let orbits = |t: &OrbitTable| -> Vec<(String, usize)> { t.orbits.iter().map(|o| (o.label.clone(), o.dimension)).collect() };
    let g_orbits = orbits(&g_table);
    let h_orbits = orbits(&h_table);
    let pairing_g: Vec<String> = lift.g_vector().iter().map(|z| z.to_string()).collect();
    let pairing_h: Vec<String> = lift.h_vector().iter().map(|z| z.to_string()).collect();

    let dims = |o: &[(String, usize)]| o.iter().map(|x| x.1).collect::<Vec<_>>();
    let expected_vector = vec!["1", "0", "0"];
    let one_term = |v: &[(String, String)], name: &str| v.len() == 1 && v[0].0 == name && v[0].1 == "1";
    let checkpoints = vec![
        NamedCheck {
            name: GL2_CHECKPOINTS[0].into(),
            passed: dims(&g_orbits) == [0, 0, 1] && dims(&h_orbits) == [0, 0, 1],
            detail: format!("G {g_orbits:?}, H {h_orbits:?}"),
        },
        NamedCheck {
            name: GL2_CHECKPOINTS[1].into(),
            passed: one_term(&eta_h_named, "1_PGL(2,R)"),
            detail: format!("{eta_h_named:?}"),
        },
        NamedCheck {
            name: GL2_CHECKPOINTS[2].into(),
            passed: one_term(&eta_g_named, "1_GL(2,R)"),
            detail: format!("{eta_g_named:?}"),
        },
        NamedCheck {
            name: GL2_CHECKPOINTS[3].into(),
            passed: pairing_g == expected_vector && pairing_h == expected_vector,
            detail: format!("G ({}), H ({})", pairing_g.join(", "), pairing_h.join(", ")),
        },
        NamedCheck {
            name: GL2_CHECKPOINTS[4].into(),
            passed: a_packet_g == ["1_GL(2,R)"] && a_packet_h == ["1_PGL(2,R)"],
            detail: format!("G {a_packet_g:?}, H {a_packet_h:?}"),
        },
        NamedCheck {
            name: GL2_CHECKPOINTS[5].into(),
            passed: lift.passed(),
            detail: format!("{} mismatches", lift.mismatches.len()),
        },
    ];
    Ok(Gl2Report {
        checkpoints,
        g_orbits,
        h_orbits,
        sigma_order: m as u32,
        pairing_g,
        pairing_h,
        eta_h: eta_h_named,
        eta_g: eta_g_named,
        a_packet_g,
        a_packet_h,
        lift,
    })
}
