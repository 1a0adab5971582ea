//! The correspondence for real tori between quasicharacters with strong real forms and
//! geometric parameters with characters of component groups, and its equivariance
//! under compatible automorphism pairs.
//!
//! Conventions. `L = X^*(T) = X_*(dual T)` is `Z^n` and `a` is the involution of `L`
//! induced by the distinguished element of the E-group. The geometric parameter is
//! `y = exp(2 pi i tau) delta` with `y^2 = exp(2 pi i lambda)`, which reads
//! `(1 + a) tau + lambda_z = lambda (mod L)`. On the representation side the Cartan
//! involution acts on `L` by `-a`, so `nu` is taken modulo `(1 + a) L`.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{fixed_and_antifixed, quotient_structure, AbelianQuotientDescriptor, Lattice, Modulus, QuotientAmbient};
use crate::matrix::{rat_vec, unit, vadd, vsub, IntMatrix, Matrix, RatMatrix};
use crate::scalar::{frac, rat, serde_exact, Int, Rat};

/// A real torus through the involution on `L`, the exponent of `delta^2` and the
/// generators of the kernel defining the quotient of the component group.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RealTorusDatum {
    pub a: IntMatrix,
    #[serde(with = "serde_exact::rat_vec")]
    pub z_exponent: Vec<Rat>,
    #[serde(default, with = "crate::rootdata::int_rows")]
    pub q_kernel: Vec<Vec<Int>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusQuasicharacterParam {
    #[serde(with = "serde_exact::rat_vec")]
    pub d_pi: Vec<Rat>,
    #[serde(with = "serde_exact::rat_vec")]
    pub nu: Vec<Rat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGeometricParam {
    #[serde(with = "serde_exact::rat_vec")]
    pub lambda: Vec<Rat>,
    /// Exponent `tau` of `y = exp(2 pi i tau) delta`.
    #[serde(with = "serde_exact::rat_vec")]
    pub y_exponent: Vec<Rat>,
}

/// A strong real form `exp(2 pi i e) delta`, before passing to its class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongRealForm {
    #[serde(with = "serde_exact::rat_vec")]
    pub exponent: Vec<Rat>,
}

/// Class `mu = (1 - a^T) e` in `(X_* tensor Q)^{-a} / (1 - a^T) X_*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongRealFormClass {
    #[serde(with = "serde_exact::rat_vec")]
    pub mu: Vec<Rat>,
}

/// A character of the component group, recorded by exponents `v_j` (modulo 2) of its
/// values `exp(pi i v_j)` on the basis of `L^{-a}` returned by
/// [`RealTorusDatum::component_basis`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentCharacter {
    #[serde(with = "serde_exact::rat_vec")]
    pub values: Vec<Rat>,
}

impl ComponentCharacter {
    fn normalized(&self) -> Vec<Rat> {
        let two = rat(2, 1);
        self.values.iter().map(|v| frac(&(v / &two)) * &two).collect()
    }

    pub fn same(&self, other: &Self) -> bool {
        self.normalized() == other.normalized()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrongRealFormDescription {
    pub descriptor: AbelianQuotientDescriptor,
    /// Q-basis of the `(-1)`-eigenspace of `a^T` on `X_* tensor Q`.
    #[serde(with = "serde_exact::rat_vecs")]
    pub antifixed_basis: Vec<Vec<Rat>>,
}

/// A compatible pair: `theta` on `L` acting on both sides, with a cocycle exponent twisting
/// the dual automorphism (`delta -> exp(-2 pi i alpha) delta`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaPair {
    pub theta: IntMatrix,
    pub theta_dual: IntMatrix,
    #[serde(with = "serde_exact::rat_vec")]
    pub cocycle: Vec<Rat>,
}

impl ThetaPair {
    pub fn untwisted(theta: IntMatrix) -> Self {
        let n = theta.rows();
        ThetaPair {
            theta_dual: theta.clone(),
            theta,
            cocycle: vec![BigRational::zero(); n],
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub cases_checked: u64,
    pub failures: Vec<String>,
}

impl EquivarianceReport {
    pub fn merge(&mut self, other: EquivarianceReport) {
        self.cases_checked += other.cases_checked;
        self.failures.extend(other.failures);
    }
}

fn rm(m: &IntMatrix) -> RatMatrix {
    m.to_rat()
}

impl RealTorusDatum {
    pub fn new(a: IntMatrix, z_exponent: Vec<Rat>, q_kernel: Vec<Vec<Int>>) -> Result<Self> {
        let t = RealTorusDatum {
            a,
            z_exponent,
            q_kernel,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn rank(&self) -> usize {
        self.a.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rank();
        if !self.a.is_square() || !(&self.a * &self.a).is_identity() {
            return Err(Error::NotInvolution);
        }
        if self.z_exponent.len() != n {
            return Err(Error::Dimension("z exponent length".into()));
        }
        let moved = vsub(&rm(&self.a).mul_vec(&self.z_exponent), &self.z_exponent);
        if !Lattice::standard(n).contains(&moved) {
            return Err(Error::InvalidDatum("z is not fixed by the involution".into()));
        }
        for k in &self.q_kernel {
            if k.len() != n || self.a.mul_vec(k) != k.iter().map(|x| -x).collect::<Vec<_>>() {
                return Err(Error::InvalidDatum("quotient kernel must lie in the (-1)-eigenlattice".into()));
            }
        }
        Ok(())
    }

    fn one_plus_a(&self) -> RatMatrix {
        &RatMatrix::identity(self.rank()) + &rm(&self.a)
    }

    fn one_minus_a(&self) -> RatMatrix {
        &RatMatrix::identity(self.rank()) - &rm(&self.a)
    }

    /// `(1 + a) L`, the modulus for `nu`.
    pub fn nu_modulus(&self) -> Modulus {
        let p = self.one_plus_a();
        Modulus::new(self.rank(), p.to_cols(), Vec::new()).expect("lengths")
    }

    /// `(1 - a) L_Q + L`, the modulus for `tau` (conjugation by the dual torus).
    pub fn tau_modulus(&self) -> Modulus {
        let n = self.rank();
        Modulus::new(n, (0..n).map(|i| unit(n, i)).collect(), self.one_minus_a().to_cols()).expect("lengths")
    }

    /// `(1 - a^T) X_*`, the modulus for strong real form classes.
    pub fn mu_modulus(&self) -> Modulus {
        let m = &RatMatrix::identity(self.rank()) - &rm(&self.a).transpose();
        Modulus::new(self.rank(), m.to_cols(), Vec::new()).expect("lengths")
    }

    /// Basis of the lattice `L^{-a}`, on which component characters are evaluated.
    pub fn component_basis(&self) -> Vec<Vec<Int>> {
        let neg = -&self.a;
        fixed_and_antifixed(&neg, &Lattice::standard(self.rank()))
            .expect("involution")
            .0
            .basis()
            .to_vec()
    }

    pub fn check_quasicharacter(&self, p: &TorusQuasicharacterParam) -> Result<()> {
        let n = self.rank();
        if p.d_pi.len() != n || p.nu.len() != n {
            return Err(Error::Dimension("parameter length".into()));
        }
        if !Lattice::standard(n).contains(&vsub(&p.nu, &self.z_exponent)) {
            return Err(Error::Constraint("nu is not in lambda_z + X^*".into()));
        }
        let d = vsub(&p.d_pi, &p.nu);
        if self.one_minus_a().mul_vec(&d).iter().any(|x| !x.is_zero()) {
            return Err(Error::Constraint("d_pi - nu is not fixed by a".into()));
        }
        Ok(())
    }

    pub fn check_geometric(&self, g: &TorusGeometricParam) -> Result<()> {
        let n = self.rank();
        if g.lambda.len() != n || g.y_exponent.len() != n {
            return Err(Error::Dimension("parameter length".into()));
        }
        let lhs = vadd(&self.one_plus_a().mul_vec(&g.y_exponent), &self.z_exponent);
        if !Lattice::standard(n).contains(&vsub(&lhs, &g.lambda)) {
            return Err(Error::Constraint("y^2 differs from exp(2 pi i lambda)".into()));
        }
        Ok(())
    }

    /// `tau = (d_pi - nu) / 2`.
    pub fn llc_forward(&self, p: &TorusQuasicharacterParam) -> Result<TorusGeometricParam> {
        self.check_quasicharacter(p)?;
        let half = rat(1, 2);
        Ok(TorusGeometricParam {
            lambda: p.d_pi.clone(),
            y_exponent: vsub(&p.d_pi, &p.nu).iter().map(|x| x * &half).collect(),
        })
    }

    /// `nu = lambda - (1 + a) tau`.
    pub fn llc_backward(&self, g: &TorusGeometricParam) -> Result<TorusQuasicharacterParam> {
        self.check_geometric(g)?;
        Ok(TorusQuasicharacterParam {
            d_pi: g.lambda.clone(),
            nu: vsub(&g.lambda, &self.one_plus_a().mul_vec(&g.y_exponent)),
        })
    }

    pub fn same_quasicharacter(&self, p: &TorusQuasicharacterParam, q: &TorusQuasicharacterParam) -> bool {
        p.d_pi == q.d_pi && self.nu_modulus().contains(&vsub(&p.nu, &q.nu))
    }

    pub fn same_geometric(&self, g: &TorusGeometricParam, h: &TorusGeometricParam) -> bool {
        g.lambda == h.lambda && self.tau_modulus().contains(&vsub(&g.y_exponent, &h.y_exponent))
    }

    pub fn classify_strong_real_forms(&self) -> StrongRealFormDescription {
        let n = self.rank();
        let at = self.a.transpose();
        let neg = -&at;
        let (anti_lattice, _) = fixed_and_antifixed(&neg, &Lattice::standard(n)).expect("involution");
        let image = self.mu_modulus().lattice_gens;
        let descriptor =
            quotient_structure(&anti_lattice, &image, QuotientAmbient::Rational).expect("image in the eigenspace");
        StrongRealFormDescription {
            descriptor,
            antifixed_basis: anti_lattice.basis_rat(),
        }
    }

    /// First map of the chain: a strong real form to its class.
    pub fn real_form_class(&self, x: &StrongRealForm) -> StrongRealFormClass {
        let m = &RatMatrix::identity(self.rank()) - &rm(&self.a).transpose();
        StrongRealFormClass {
            mu: m.mul_vec(&x.exponent),
        }
    }

    /// Second map: a class to a character of the component group, `sigma -> exp(pi i <mu, sigma>)`.
    pub fn class_to_character(&self, c: &StrongRealFormClass) -> Result<ComponentCharacter> {
        let at = rm(&self.a).transpose();
        if vadd(&at.mul_vec(&c.mu), &c.mu).iter().any(|x| !x.is_zero()) {
            return Err(Error::Constraint("mu is not anti-fixed".into()));
        }
        Ok(ComponentCharacter {
            values: self
                .component_basis()
                .iter()
                .map(|b| crate::matrix::dot(&c.mu, &rat_vec(b)))
                .collect(),
        })
    }

    /// Third map: back from a character to the anti-fixed class representative.
    pub fn character_to_class(&self, k: &ComponentCharacter) -> Result<StrongRealFormClass> {
        let n = self.rank();
        let basis = self.component_basis();
        if k.values.len() != basis.len() {
            return Err(Error::Dimension("character length".into()));
        }
        let at = rm(&self.a).transpose();
        let anti = (&at + &RatMatrix::identity(n)).kernel();
        // Solve <sum c_i w_i, b_j> = v_j.
        let mut rows = Vec::new();
        for b in &basis {
            let br = rat_vec(b);
            rows.push(anti.iter().map(|w| crate::matrix::dot(w, &br)).collect::<Vec<_>>());
        }
        if rows.is_empty() {
            return Ok(StrongRealFormClass {
                mu: vec![BigRational::zero(); n],
            });
        }
        let m = Matrix::from_rows(rows)?;
        let c = m.solve(&k.values).ok_or(Error::Singular)?;
        let mut mu = vec![BigRational::zero(); n];
        for (ci, w) in c.iter().zip(&anti) {
            mu = vadd(&mu, &w.iter().map(|x| x * ci).collect::<Vec<_>>());
        }
        Ok(StrongRealFormClass { mu })
    }

    pub fn same_real_form_class(&self, x: &StrongRealFormClass, y: &StrongRealFormClass) -> bool {
        self.mu_modulus().contains(&vsub(&x.mu, &y.mu))
    }

    /// Whether the character is trivial on the kernel defining the quotient.
    pub fn character_factors_through_quotient(&self, k: &ComponentCharacter) -> Result<bool> {
        let mu = self.character_to_class(k)?.mu;
        Ok(self.q_kernel.iter().all(|g| {
            let v = crate::matrix::dot(&mu, &rat_vec(g)) / rat(2, 1);
            v.is_integer()
        }))
    }

    /// Rejects pairs that are not compatible with this torus.
    pub fn check_pair(&self, pair: &ThetaPair) -> Result<()> {
        let n = self.rank();
        let t = &pair.theta;
        if t.rows() != n || t.cols() != n || pair.theta_dual.rows() != n || pair.cocycle.len() != n {
            return Err(Error::Dimension("automorphism size".into()));
        }
        if t.det_ring().magnitude() != &num_bigint::BigUint::from(1u32) {
            return Err(Error::Incompatible("theta is not invertible over Z".into()));
        }
        if pair.theta_dual != *t {
            return Err(Error::Incompatible("dual action is not the transfer of theta".into()));
        }
        if &(t * &self.a) != &(&self.a * t) {
            return Err(Error::Incompatible("theta does not commute with a".into()));
        }
        let moved = vsub(&rm(t).mul_vec(&self.z_exponent), &self.z_exponent);
        if !Lattice::standard(n).contains(&moved) {
            return Err(Error::Incompatible("theta moves z".into()));
        }
        if !self.tau_modulus().contains(&pair.cocycle) {
            return Err(Error::Incompatible(
                "cocycle twist does not preserve the conjugacy class of delta".into(),
            ));
        }
        if !self.q_kernel.is_empty() {
            let k = Lattice::generated_by(n, &self.q_kernel)?;
            if self.q_kernel.iter().any(|g| !k.contains(&rat_vec(&t.mul_vec(g)))) {
                return Err(Error::Incompatible("theta does not preserve the quotient".into()));
            }
        }
        Ok(())
    }

    /// `(p, f) -> (p o theta, theta^{-1}(f))`.
    pub fn act_on_rep_side(
        &self,
        pair: &ThetaPair,
        p: &TorusQuasicharacterParam,
        f: &StrongRealFormClass,
    ) -> Result<(TorusQuasicharacterParam, StrongRealFormClass)> {
        self.check_pair(pair)?;
        let t = rm(&pair.theta);
        let tit = t.inverse().ok_or(Error::Singular)?.transpose();
        Ok((
            TorusQuasicharacterParam {
                d_pi: t.mul_vec(&p.d_pi),
                nu: t.mul_vec(&p.nu),
            },
            StrongRealFormClass { mu: tit.mul_vec(&f.mu) },
        ))
    }

    /// `((y, Lambda), kappa) -> (theta_dual (y, Lambda), kappa o theta_dual^{-1})`.
    pub fn act_on_param_side(
        &self,
        pair: &ThetaPair,
        g: &TorusGeometricParam,
        k: &ComponentCharacter,
    ) -> Result<(TorusGeometricParam, ComponentCharacter)> {
        self.check_pair(pair)?;
        let t = rm(&pair.theta_dual);
        let ti = t.inverse().ok_or(Error::Singular)?;
        let basis = self.component_basis();
        let anti = Lattice::new(self.rank(), basis.clone())?;
        let mut values = Vec::with_capacity(basis.len());
        for b in &basis {
            let img = ti.mul_vec(&rat_vec(b));
            let c = anti
                .coordinates(&img)
                .ok_or_else(|| Error::NotPreserved("component lattice".into()))?;
            let mut v = BigRational::zero();
            for (ci, kv) in c.iter().zip(&k.values) {
                v += BigRational::from_integer(ci.clone()) * kv;
            }
            values.push(v);
        }
        Ok((
            TorusGeometricParam {
                lambda: t.mul_vec(&g.lambda),
                y_exponent: vsub(&t.mul_vec(&g.y_exponent), &pair.cocycle),
            },
            ComponentCharacter { values },
        ))
    }

    /// Checks that the correspondence commutes with the two actions on every parameter of
    /// height at most `bound`, and on every strong real form of height at most `bound`.
    pub fn verify_equivariance(&self, pair: &ThetaPair, bound: u32) -> Result<EquivarianceReport> {
        let grid = self.grid(bound);
        self.verify_on(pair, &grid)
    }

    /// Parameters and real forms of height at most `bound`, with the data reused across
    /// automorphism pairs precomputed.
    pub fn grid(&self, bound: u32) -> TorusGrid {
        let params = self.parameter_grid(bound);
        let forms = self.real_form_grid(bound);
        let basis = self.component_basis();
        let characters = forms
            .iter()
            .map(|f| self.class_to_character(f).expect("anti-fixed"))
            .collect();
        let scaled = ScaledGrid::new(self, &params);
        TorusGrid {
            params,
            forms,
            characters,
            basis,
            scaled,
        }
    }

    /// Equivariance on a precomputed grid.
    pub fn verify_on(&self, pair: &ThetaPair, grid: &TorusGrid) -> Result<EquivarianceReport> {
        self.check_pair(pair)?;
        self.verify_unchecked(pair, grid)
    }

    /// Runs the sweep without first rejecting incompatible pairs. Used to show what the
    /// compatibility conditions rule out.
    #[doc(hidden)]
    pub fn verify_unchecked(&self, pair: &ThetaPair, grid: &TorusGrid) -> Result<EquivarianceReport> {
        let mut report = EquivarianceReport::default();
        let fast = grid.scaled.for_pair(pair);
        for (p, sp) in grid.params.iter().zip(&grid.scaled.params) {
            report.cases_checked += 1;
            if let Some(why) = fast.check(&grid.scaled, sp) {
                report.failures.push(format!(
                    "{why} at d_pi = {}, nu = {}",
                    fmt_vec(&p.d_pi),
                    fmt_vec(&p.nu)
                ));
            }
        }
        // Real forms: (theta^{-1})^T mu against kappa o theta_dual^{-1}.
        let t = rm(&pair.theta);
        let ti = t.inverse().ok_or(Error::Singular)?;
        let tit = ti.transpose();
        let tdi = rm(&pair.theta_dual).inverse().ok_or(Error::Singular)?;
        let basis_rat: Vec<Vec<Rat>> = grid.basis.iter().map(|b| rat_vec(b)).collect();
        let coords: Vec<Vec<Int>> = if grid.basis.is_empty() {
            Vec::new()
        } else {
            let lat = Lattice::new(self.rank(), grid.basis.clone())?;
            basis_rat
                .iter()
                .map(|b| {
                    lat.coordinates(&tdi.mul_vec(b))
                        .ok_or_else(|| Error::NotPreserved("component lattice".into()))
                })
                .collect::<Result<_>>()?
        };
        for (f, k) in grid.forms.iter().zip(&grid.characters) {
            report.cases_checked += 1;
            let mu2 = tit.mul_vec(&f.mu);
            let lhs = ComponentCharacter {
                values: basis_rat.iter().map(|b| crate::matrix::dot(&mu2, b)).collect(),
            };
            let rhs = ComponentCharacter {
                values: coords
                    .iter()
                    .map(|c| {
                        c.iter()
                            .zip(&k.values)
                            .map(|(ci, kv)| BigRational::from_integer(ci.clone()) * kv)
                            .fold(BigRational::zero(), |x, y| x + y)
                    })
                    .collect(),
            };
            if !lhs.same(&rhs) {
                report.failures.push(format!("real form mu = {}", fmt_vec(&f.mu)));
            }
            if !self.q_kernel.is_empty()
                && self.character_factors_through_quotient(k)?
                && !self.character_factors_through_quotient(&rhs)?
            {
                report.failures.push(format!("quotient not preserved at mu = {}", fmt_vec(&f.mu)));
            }
        }
        Ok(report)
    }

    /// Slow reference check of one parameter through the public maps.
    pub fn commutes_at(&self, pair: &ThetaPair, p: &TorusQuasicharacterParam) -> Result<bool> {
        let zero = ComponentCharacter {
            values: vec![BigRational::zero(); self.component_basis().len()],
        };
        let f = StrongRealFormClass {
            mu: vec![BigRational::zero(); self.rank()],
        };
        let (p2, _) = self.act_on_rep_side(pair, p, &f)?;
        let lhs = self.llc_forward(&p2)?;
        let (rhs, _) = self.act_on_param_side(pair, &self.llc_forward(p)?, &zero)?;
        self.check_geometric(&rhs)?;
        Ok(self.same_geometric(&lhs, &rhs))
    }

    /// Quasicharacter parameters `nu = lambda_z + l`, `|l|_1 <= bound`, deduplicated modulo
    /// `(1 + a) L`, and `d_pi = nu + d` with `d` in the `a`-fixed lattice scaled by `1/2`
    /// with numerator height at most `bound`.
    pub fn parameter_grid(&self, bound: u32) -> Vec<TorusQuasicharacterParam> {
        let n = self.rank();
        let key = self.nu_modulus().prepare();
        let mut seen = HashSet::new();
        let mut nus = Vec::new();
        for l in height_vectors(n, bound) {
            let nu = vadd(&self.z_exponent, &rat_vec(&l));
            if seen.insert(key.key(&nu)) {
                nus.push(nu);
            }
        }
        let (fixed, _) = fixed_and_antifixed(&self.a, &Lattice::standard(n)).expect("involution");
        let fb = fixed.basis_rat();
        let half = rat(1, 2);
        let mut out = Vec::new();
        for nu in &nus {
            for c in height_vectors(fb.len(), bound) {
                let mut d = vec![BigRational::zero(); n];
                for (ci, b) in c.iter().zip(&fb) {
                    let s = BigRational::from_integer(ci.clone()) * &half;
                    d = vadd(&d, &b.iter().map(|x| x * &s).collect::<Vec<_>>());
                }
                out.push(TorusQuasicharacterParam {
                    d_pi: vadd(nu, &d),
                    nu: nu.clone(),
                });
            }
        }
        out
    }

    /// Strong real form classes `mu = sum (k_j / 2) w_j` over the anti-fixed basis with
    /// `sum |k_j| <= bound`, deduplicated.
    pub fn real_form_grid(&self, bound: u32) -> Vec<StrongRealFormClass> {
        let n = self.rank();
        let desc = self.classify_strong_real_forms();
        let key = self.mu_modulus().prepare();
        let half = rat(1, 2);
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for c in height_vectors(desc.antifixed_basis.len(), bound) {
            let mut mu = vec![BigRational::zero(); n];
            for (ci, w) in c.iter().zip(&desc.antifixed_basis) {
                let s = BigRational::from_integer(ci.clone()) * &half;
                mu = vadd(&mu, &w.iter().map(|x| x * &s).collect::<Vec<_>>());
            }
            if seen.insert(key.key(&mu)) {
                out.push(StrongRealFormClass { mu });
            }
        }
        out
    }
}

/// Summary of an exhaustive equivariance sweep.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct GridReport {
    pub tori: u64,
    pub pairs: u64,
    pub twisted_pairs: u64,
    pub cases_checked: u64,
    pub failures: Vec<String>,
}

/// Sweeps every signed permutation involution class of rank at most `max_rank`, with
/// `delta^2` trivial and nontrivial, every commuting signed permutation that fixes the
/// class of `z`, untwisted and with a nonzero coboundary cocycle, over parameters of
/// height at most `bound`.
pub fn equivariance_grid(max_rank: usize, bound: u32) -> GridReport {
    let mut out = GridReport::default();
    for n in 1..=max_rank {
        let perms = signed_permutations(n);
        for a in involution_class_representatives(n) {
            for z in z_choices(&a) {
                let t = RealTorusDatum::new(a.clone(), z, Vec::new()).expect("valid torus");
                out.tori += 1;
                let grid = t.grid(bound);
                let third = rat(1, 3);
                let twist = vadd(
                    &t.one_minus_a().mul_vec(&vec![third; n]),
                    &unit(n, 0),
                );
                for theta in &perms {
                    for cocycle in [vec![BigRational::zero(); n], twist.clone()] {
                        let twisted = cocycle.iter().any(|x| !x.is_zero());
                        let pair = ThetaPair {
                            theta: theta.clone(),
                            theta_dual: theta.clone(),
                            cocycle,
                        };
                        if t.check_pair(&pair).is_err() {
                            continue;
                        }
                        out.pairs += 1;
                        out.twisted_pairs += twisted as u64;
                        let r = t.verify_on(&pair, &grid).expect("checked pair");
                        out.cases_checked += r.cases_checked;
                        out.failures.extend(r.failures.into_iter().map(|f| {
                            format!("a = {:?}, theta = {:?}: {f}", a.to_rows(), theta.to_rows())
                        }));
                    }
                }
            }
        }
    }
    out
}

fn z_choices(a: &IntMatrix) -> Vec<Vec<Rat>> {
    let n = a.rows();
    let zero = vec![BigRational::zero(); n];
    let half = rat(1, 2);
    let mut e0 = zero.clone();
    e0[0] = half.clone();
    let fixed_mod_l = |v: &Vec<Rat>| Lattice::standard(n).contains(&vsub(&a.to_rat().mul_vec(v), v));
    if fixed_mod_l(&e0) {
        return vec![zero, e0];
    }
    let mut e01 = e0;
    e01[1] = half;
    vec![zero, e01]
}

/// A precomputed sweep for one torus.
pub struct TorusGrid {
    pub params: Vec<TorusQuasicharacterParam>,
    pub forms: Vec<StrongRealFormClass>,
    pub characters: Vec<ComponentCharacter>,
    pub basis: Vec<Vec<Int>>,
    scaled: ScaledGrid,
}

/// Exact integer form of the per-parameter check: every vector is multiplied by a
/// common even scale `s`, so all quantities are integers and membership in
/// `(1 - a) L_Q + L` becomes congruences after a Smith reduction.
struct ScaledGrid {
    s: i128,
    a: Vec<Vec<i128>>,
    z: Vec<i128>,
    /// Rows of `U K` where `K` spans the annihilator of `(1 - a) Q^n`.
    uk: Vec<Vec<i128>>,
    diag: Vec<i128>,
    params: Vec<(Vec<i128>, Vec<i128>)>,
}

/// The pair-dependent part, at scale `s * c` where `c` clears the cocycle denominators.
struct PairCheck {
    c: i128,
    theta: Vec<Vec<i128>>,
    cocycle: Vec<i128>,
}

fn small(x: &Int) -> i128 {
    use num_traits::ToPrimitive;
    x.to_i128().expect("small integer")
}

fn small_matrix(m: &IntMatrix) -> Vec<Vec<i128>> {
    m.to_rows().iter().map(|r| r.iter().map(small).collect()).collect()
}

fn scaled(v: &[Rat], s: i128) -> Vec<i128> {
    v.iter()
        .map(|x| small(&(x * BigRational::from_integer(BigInt::from(s))).to_integer()))
        .collect()
}

fn apply(m: &[Vec<i128>], v: &[i128]) -> Vec<i128> {
    m.iter()
        .map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

impl ScaledGrid {
    fn new(t: &RealTorusDatum, grid: &[TorusQuasicharacterParam]) -> Self {
        let n = t.rank();
        let den = crate::scalar::common_denominator(
            grid.iter()
                .flat_map(|p| p.d_pi.iter().chain(&p.nu))
                .chain(&t.z_exponent),
        );
        let s = 2 * small(&den);
        let one_minus_t = (&IntMatrix::identity(n) - &t.a).transpose();
        let k = crate::lattice::saturated_kernel(&one_minus_t);
        let (uk, diag) = if k.is_empty() {
            (Vec::new(), Vec::new())
        } else {
            let km = Matrix::from_rows(k).expect("rows");
            let snf = crate::lattice::smith_normal_form(&km);
            let ukm = &snf.u * &km;
            (small_matrix(&ukm), snf.diagonal().iter().map(small).collect())
        };
        ScaledGrid {
            s,
            a: small_matrix(&t.a),
            z: scaled(&t.z_exponent, s),
            uk,
            diag,
            params: grid.iter().map(|p| (scaled(&p.d_pi, s), scaled(&p.nu, s))).collect(),
        }
    }

    fn for_pair(&self, pair: &ThetaPair) -> PairCheck {
        let c = small(&crate::scalar::common_denominator(pair.cocycle.iter()));
        PairCheck {
            c,
            theta: small_matrix(&pair.theta),
            cocycle: scaled(&pair.cocycle, self.s * c),
        }
    }
}

impl PairCheck {
    fn check(&self, g: &ScaledGrid, (d, nu): &(Vec<i128>, Vec<i128>)) -> Option<&'static str> {
        let c = self.c;
        let s = g.s * c;
        let d: Vec<i128> = d.iter().map(|x| x * c).collect();
        let nu: Vec<i128> = nu.iter().map(|x| x * c).collect();
        let z: Vec<i128> = g.z.iter().map(|x| x * c).collect();
        let d2 = apply(&self.theta, &d);
        let nu2 = apply(&self.theta, &nu);
        if nu2.iter().zip(&z).any(|(x, z)| (x - z).rem_euclid(s) != 0) {
            return Some("acted nu leaves lambda_z + X^*");
        }
        let diff2: Vec<i128> = d2.iter().zip(&nu2).map(|(x, y)| x - y).collect();
        if apply(&g.a, &diff2) != diff2 {
            return Some("acted d_pi - nu is not fixed by a");
        }
        let tau_lhs: Vec<i128> = diff2.iter().map(|x| x / 2).collect();
        let tau: Vec<i128> = d.iter().zip(&nu).map(|(x, y)| (x - y) / 2).collect();
        let tau_rhs: Vec<i128> = apply(&self.theta, &tau)
            .iter()
            .zip(&self.cocycle)
            .map(|(x, a)| x - a)
            .collect();
        let atau = apply(&g.a, &tau_rhs);
        for i in 0..tau_rhs.len() {
            if (tau_rhs[i] + atau[i] + z[i] - d2[i]).rem_euclid(s) != 0 {
                return Some("acted geometric parameter violates the constraint");
            }
        }
        let w: Vec<i128> = tau_lhs.iter().zip(&tau_rhs).map(|(x, y)| x - y).collect();
        let in_modulus = apply(&g.uk, &w)
            .iter()
            .zip(&g.diag)
            .all(|(x, m)| x.rem_euclid(m * s) == 0);
        if !in_modulus {
            return Some("correspondence does not commute");
        }
        None
    }
}

fn fmt_vec(v: &[Rat]) -> String {
    format!(
        "({})",
        v.iter().map(crate::scalar::fmt_rat).collect::<Vec<_>>().join(", ")
    )
}

/// Integer vectors of length `n` with `l^1` norm at most `bound`.
pub fn height_vectors(n: usize, bound: u32) -> Vec<Vec<Int>> {
    fn rec(n: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<Int>>) {
        if cur.len() == n {
            out.push(cur.iter().map(|&x| BigInt::from(x)).collect());
            return;
        }
        for x in -left..=left {
            cur.push(x);
            rec(n, left - x.abs(), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, bound as i64, &mut Vec::new(), &mut out);
    out
}

/// All `2^n n!` signed permutation matrices.
pub fn signed_permutations(n: usize) -> Vec<IntMatrix> {
    let mut perms: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for p in &perms {
            for i in 0..n {
                if !p.contains(&i) {
                    let mut q = p.clone();
                    q.push(i);
                    next.push(q);
                }
            }
        }
        perms = next;
    }
    let mut out = Vec::new();
    for p in &perms {
        for signs in 0..(1u32 << n) {
            let mut m = IntMatrix::zeros(n, n);
            for (j, &i) in p.iter().enumerate() {
                m[(i, j)] = BigInt::from(if signs >> j & 1 == 1 { -1 } else { 1 });
            }
            out.push(m);
        }
    }
    out
}

/// One involution per conjugacy class of signed permutation involutions: `p` ones,
/// `q` minus ones and `r` coordinate swaps with `p + q + 2r = n`.
pub fn involution_class_representatives(n: usize) -> Vec<IntMatrix> {
    let mut out = Vec::new();
    for r in 0..=n / 2 {
        for q in 0..=(n - 2 * r) {
            let p = n - 2 * r - q;
            let mut m = IntMatrix::zeros(n, n);
            for i in 0..p {
                m[(i, i)] = BigInt::from(1);
            }
            for i in p..p + q {
                m[(i, i)] = BigInt::from(-1);
            }
            for k in 0..r {
                let i = p + q + 2 * k;
                m[(i, i + 1)] = BigInt::from(1);
                m[(i + 1, i)] = BigInt::from(1);
            }
            out.push(m);
        }
    }
    out
}
