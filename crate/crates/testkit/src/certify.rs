//! Certification of clan data and orbit tables against the finite-field oracle.

use std::collections::HashMap;

use twendo_core::geom_params::{classify_flag, clan_leq, enumerate_clans, representative_flag, Clan, OrbitTable};
use twendo_core::matrix::Matrix;
use twendo_core::scalar::Field;

use crate::{flag_count, profile_leq, rank_profile, split_group_order, split_orbits, stabilizer_shapes, Flag, Fp, RankProfile};

/// Oracle data for one split, indexed like [`enumerate_clans`].
#[derive(Clone, Debug, PartialEq)]
pub struct SplitCertificate {
    pub plus: Vec<bool>,
    pub clans: Vec<Clan>,
    /// Dimensions fitted from orbit sizes over both fields.
    pub dimensions: Vec<usize>,
    /// Closure relation from rank semicontinuity, equal over both fields.
    pub leq: Vec<Vec<bool>>,
}

struct FieldData {
    sizes: Vec<u64>,
    leq: Vec<Vec<bool>>,
}

fn to_matrix<const P: u64>(f: &Flag) -> Matrix<Fp<P>> {
    let n = f.basis.len();
    let cols: Vec<Vec<Fp<P>>> = f.basis.iter().map(|v| v.iter().map(|&x| Fp(x)).collect()).collect();
    Matrix::from_cols(n, &cols).expect("square")
}

fn from_matrix<F: Field>(m: &Matrix<F>, q: u64, conv: impl Fn(&F) -> u64) -> Flag {
    Flag {
        basis: m.to_cols().iter().map(|c| c.iter().map(|x| conv(x) % q).collect()).collect(),
    }
}

fn over<const P: u64>(plus: &[bool], clans: &[Clan]) -> Result<FieldData, String> {
    let q = P;
    let n = plus.len();
    let orbits = split_orbits(plus, q);
    if orbits.orbit_count() != clans.len() {
        return Err(format!("{} orbits over F_{q} but {} clans for {plus:?}", orbits.orbit_count(), clans.len()));
    }
    if orbits.sizes.iter().sum::<usize>() as u64 != flag_count(n, q) {
        return Err(format!("orbit sizes do not add up over F_{q}"));
    }
    let mut clan_of_orbit: Vec<Option<Clan>> = vec![None; orbits.orbit_count()];
    let mut profile_of_orbit: Vec<Option<RankProfile>> = vec![None; orbits.orbit_count()];
    for (f, &o) in orbits.flags.iter().zip(&orbits.orbit_of) {
        let c = classify_flag(&to_matrix::<P>(f), plus).map_err(|e| e.to_string())?;
        match &clan_of_orbit[o] {
            None => clan_of_orbit[o] = Some(c),
            Some(prev) if *prev != c => return Err(format!("classification not constant on an orbit over F_{q}")),
            _ => {}
        }
        let prof = rank_profile(f, plus, q);
        match &profile_of_orbit[o] {
            None => profile_of_orbit[o] = Some(prof),
            Some(prev) if *prev != prof => return Err(format!("rank profile not constant on an orbit over F_{q}")),
            _ => {}
        }
    }
    let mut sizes = vec![0u64; clans.len()];
    let mut orbit_of_clan = vec![usize::MAX; clans.len()];
    for (o, c) in clan_of_orbit.iter().enumerate() {
        let k = clans
            .iter()
            .position(|x| Some(x) == c.as_ref())
            .ok_or_else(|| format!("orbit {o} classifies to an unlisted clan"))?;
        if orbit_of_clan[k] != usize::MAX {
            return Err(format!("two orbits share the clan {}", clans[k]));
        }
        orbit_of_clan[k] = o;
        sizes[k] = orbits.sizes[o] as u64;
    }
    let index: HashMap<_, _> = orbits.flags.iter().enumerate().map(|(i, f)| (f.key(q), i)).collect();
    for (k, c) in clans.iter().enumerate() {
        let rep: Matrix<Fp<P>> = representative_flag(c, plus).map_err(|e| e.to_string())?;
        let f = from_matrix(&rep, q, |x| x.0);
        if orbits.orbit_of[index[&f.key(q)]] != orbit_of_clan[k] {
            return Err(format!("representative of {c} lies in another orbit over F_{q}"));
        }
    }
    let prof = |k: usize| profile_of_orbit[orbit_of_clan[k]].as_ref().expect("profile");
    let leq = (0..clans.len())
        .map(|a| (0..clans.len()).map(|b| profile_leq(prof(a), prof(b))).collect())
        .collect();
    Ok(FieldData { sizes, leq })
}

/// Runs the oracle over `F_2` and `F_3` for one split and fits dimensions.
pub fn oracle_split(plus: &[bool]) -> Result<SplitCertificate, String> {
    let n = plus.len();
    let p = plus.iter().filter(|&&x| x).count();
    let clans = enumerate_clans(p, n - p);
    let f2 = over::<2>(plus, &clans)?;
    let f3 = over::<3>(plus, &clans)?;
    if f2.leq != f3.leq {
        return Err(format!("closure relations differ between F_2 and F_3 for {plus:?}"));
    }
    let k_dim = p * p + (n - p) * (n - p);
    let (k2, k3) = (split_group_order(plus, 2), split_group_order(plus, 3));
    let mut dimensions = Vec::with_capacity(clans.len());
    for (i, c) in clans.iter().enumerate() {
        let s2 = stabilizer_shapes(k2, f2.sizes[i], 2, k_dim);
        let s3 = stabilizer_shapes(k3, f3.sizes[i], 3, k_dim);
        let common: Vec<_> = s3.iter().filter(|s| s2.contains(s)).collect();
        if common.len() != 1 {
            return Err(format!("no unique stabilizer shape for {c} in {plus:?}"));
        }
        let (r, u) = *common[0];
        dimensions.push(k_dim - r - u);
    }
    Ok(SplitCertificate {
        plus: plus.to_vec(),
        clans,
        dimensions,
        leq: f2.leq,
    })
}

/// Compares the library's clan dimensions and closure order with the oracle.
pub fn check_split(plus: &[bool]) -> Result<SplitCertificate, String> {
    let cert = oracle_split(plus)?;
    for (i, c) in cert.clans.iter().enumerate() {
        if c.dimension() != cert.dimensions[i] {
            return Err(format!("dimension of {c}: library {}, oracle {}", c.dimension(), cert.dimensions[i]));
        }
        for (j, d) in cert.clans.iter().enumerate() {
            if clan_leq(c, d) != cert.leq[i][j] {
                return Err(format!("closure {c} <= {d}: library {}, oracle {}", clan_leq(c, d), cert.leq[i][j]));
            }
        }
    }
    Ok(cert)
}

/// Checks an orbit table block by block against the oracle: orbit count, dimensions
/// and the closure relation of products of clans.
pub fn certify_table(t: &OrbitTable) -> Result<(), String> {
    let certs: Vec<SplitCertificate> = t.blocks.iter().map(|b| oracle_split(&b.plus)).collect::<Result<_, _>>()?;
    let expected: usize = certs.iter().map(|c| c.clans.len()).product();
    if t.len() != expected {
        return Err(format!("{} orbits, oracle gives {expected}", t.len()));
    }
    let mut idx = Vec::with_capacity(t.len());
    for o in &t.orbits {
        if o.clans.len() != certs.len() {
            return Err(format!("orbit {} has {} clans for {} blocks", o.label, o.clans.len(), certs.len()));
        }
        let ks: Vec<usize> = o
            .clans
            .iter()
            .zip(&certs)
            .map(|(c, cert)| cert.clans.iter().position(|x| x == c).ok_or_else(|| format!("unknown clan {c}")))
            .collect::<Result<_, _>>()?;
        let dim: usize = ks.iter().zip(&certs).map(|(&k, c)| c.dimensions[k]).sum();
        if dim != o.dimension {
            return Err(format!("dimension of {}: table {}, oracle {dim}", o.label, o.dimension));
        }
        idx.push(ks);
    }
    for a in 0..t.len() {
        for b in 0..t.len() {
            let oracle = idx[a].iter().zip(&idx[b]).zip(&certs).all(|((&x, &y), c)| c.leq[x][y]);
            if t.in_closure(a, b) != oracle {
                return Err(format!("closure {} <= {}: table {}, oracle {oracle}", t.orbits[a].label, t.orbits[b].label, t.in_closure(a, b)));
            }
        }
    }
    Ok(())
}

/// All `2^n` splits of `n` coordinates into plus and minus.
pub fn splits(n: usize) -> Vec<Vec<bool>> {
    (0..1u32 << n).map(|m| (0..n).map(|i| m >> i & 1 == 1).collect()).collect()
}
