//! Matched pairs of parameter spaces for exercising the lifting identity.

use twendo_core::cyclotomic::{CycloMatrix, Cyclotomic};
use twendo_core::endoscopy::{make_endoscopic_datum, twisted_order, TwistingAutomorphismGL, ORDER_SEARCH_BOUND};
use twendo_core::geom_params::{
    a_to_l_parameter, build_orbit_table, parameter_point, restriction_orbit_map, sigma_action, ASummand, AParameter, Ambient,
    GeometricParameterPoint, InfinitesimalCharacter, LParameter, LSummand, OrbitTable, WeilSummand,
};
use twendo_core::lifting::{
    chi_row_smooth, eta_mic_twisted_g, inner_order, eta_mic_twisted_h, labels_for, ChiProvenance, ChiRow, ComponentElement, Conventions,
    MicroProvenance, MicrolocalEntry, ParameterSpace, RootOfUnityRing, TwistedVirtualCharacter,
};
use twendo_core::scalar::{rat, Int};
use twendo_core::Result;

/// A larger side, a smaller side, the orbit map between them and the orbits whose
/// microlocal characters are compared.
#[derive(Clone, Debug)]
pub struct MatchedFixture {
    pub name: &'static str,
    pub g: ParameterSpace,
    pub h: ParameterSpace,
    pub orbit_map: Vec<usize>,
    /// Pairs `(orbit on the smaller side, its image on the larger side)`.
    pub orbits: Vec<(String, String)>,
    /// Whether the outer twist is trivial.
    pub untwisted: bool,
}

impl MatchedFixture {
    pub fn etas(&self, h_orbit: &str, g_orbit: &str) -> Result<(TwistedVirtualCharacter, TwistedVirtualCharacter)> {
        Ok((
            eta_mic_twisted_h(h_orbit, &self.h, ComponentElement::Sigma)?,
            eta_mic_twisted_g(g_orbit, &self.g)?,
        ))
    }
}

fn unipotent(n: usize) -> GeometricParameterPoint {
    let psi = AParameter {
        summands: vec![ASummand {
            weil: WeilSummand::Character { sign: false },
            sl2_dim: n,
        }],
        target: format!("GL({n})"),
    };
    parameter_point(&a_to_l_parameter(&psi).expect("valid")).expect("valid")
}

fn table(point: &GeometricParameterPoint, ambient: Ambient) -> Result<OrbitTable> {
    build_orbit_table(&InfinitesimalCharacter::new(point.flat_rep.clone()), point, &ambient)
}

fn all_orbits(g: &ParameterSpace, h: &ParameterSpace, map: &[usize]) -> Vec<(String, String)> {
    map.iter()
        .enumerate()
        .filter(|&(_, &gi)| g.labels[gi].sigma_fixed)
        .map(|(hi, &gi)| (h.table.orbits[hi].label.clone(), g.table.orbits[gi].label.clone()))
        .collect()
}

/// The twisted `GL(2)` datum with `SL(2)` on the dual side, at a given point.
fn gl2_twisted(name: &'static str, point: GeometricParameterPoint) -> Result<MatchedFixture> {
    let gt = table(&point, Ambient::Gl { n: 2 })?;
    let ht = table(&point, Ambient::Sl2)?;
    let datum = make_endoscopic_datum(2, 0, 1)?;
    let theta = TwistingAutomorphismGL::new(2)?;
    let m = twisted_order(&datum.s, &theta, ORDER_SEARCH_BOUND)?.expect("finite order");
    let ring = RootOfUnityRing::new(m as u32)?;
    let perm = sigma_action(&gt, &datum.s, Some(&theta))?;
    let map = restriction_orbit_map(&ht, &gt)?;
    let g = ParameterSpace::from_rules(gt, Some(&perm), ring, Conventions::default())?;
    let h = ParameterSpace::from_rules(ht, None, ring, Conventions::default())?;
    let orbits = all_orbits(&g, &h, &map);
    Ok(MatchedFixture {
        name,
        g,
        h,
        orbit_map: map,
        orbits,
        untwisted: false,
    })
}

/// The unipotent parameter of `GL(2)`.
pub fn gl2_unipotent() -> Result<MatchedFixture> {
    gl2_twisted("gl2-unipotent", unipotent(2))
}

/// A discrete series parameter of `GL(2)`, where `y` is not diagonal.
pub fn gl2_discrete_series() -> Result<MatchedFixture> {
    let l = LParameter {
        summands: vec![LSummand {
            weil: WeilSummand::DiscreteSeries { k: 1 },
            shift: rat(0, 1),
        }],
    };
    gl2_twisted("gl2-discrete-series", parameter_point(&l)?)
}

/// `GL(2) x GL(2)` inside `GL(4)` at an infinitesimal character with two integral
/// classes, so that the embedding is a bijection on orbits; no outer twist.
pub fn gl4_levi_product() -> Result<MatchedFixture> {
    let ch = |shift| LSummand {
        weil: WeilSummand::Character { sign: false },
        shift,
    };
    let l = LParameter {
        summands: vec![ch(rat(1, 2)), ch(rat(-1, 2)), ch(rat(5, 6)), ch(rat(-1, 6))],
    };
    let point = parameter_point(&l)?;
    let gt = table(&point, Ambient::Gl { n: 4 })?;
    let ht = table(&point, Ambient::Levi { sizes: vec![2, 2] })?;
    let s = CycloMatrix::identity(4);
    let perm = sigma_action(&gt, &s, None)?;
    let map = restriction_orbit_map(&ht, &gt)?;
    let ring = RootOfUnityRing::new(1)?;
    let g = ParameterSpace::from_rules(gt, Some(&perm), ring, Conventions::default())?;
    let h = ParameterSpace::from_rules(ht, None, ring, Conventions::default())?;
    let orbits = all_orbits(&g, &h, &map);
    Ok(MatchedFixture {
        name: "gl4-levi-product",
        g,
        h,
        orbit_map: map,
        orbits,
        untwisted: true,
    })
}

/// Decomposition rows for the orbits whose closures are not flagged smooth, in the
/// shape of the smooth rule, marked user-supplied.
pub fn supplied_rows(t: &OrbitTable) -> Vec<ChiRow> {
    t.orbits
        .iter()
        .enumerate()
        .filter(|(_, o)| o.closure_smooth.is_none())
        .map(|(j, o)| {
            let sign = Int::from(if o.dimension % 2 == 0 { 1 } else { -1 });
            let entries = (0..t.len()).map(|i| if t.in_closure(i, j) { sign.clone() } else { Int::from(0) }).collect();
            ChiRow {
                label: o.label.clone(),
                entries,
                provenance: ChiProvenance::UserSupplied,
            }
        })
        .collect()
}

/// Microlocal entries at every smaller orbit of a closure not flagged smooth, all zero
/// except one entry equal to 2, for both component elements.
pub fn supplied_entries(t: &OrbitTable, ring: RootOfUnityRing) -> Vec<MicrolocalEntry> {
    let mut out = Vec::new();
    let mut placed = false;
    for (j, o) in t.orbits.iter().enumerate().filter(|(_, o)| o.closure_smooth.is_none()) {
        for i in t.closure_of(j).into_iter().filter(|&i| i != j) {
            let v = if placed { 0 } else { 2 };
            placed = true;
            for element in [ComponentElement::Identity, ComponentElement::Sigma] {
                out.push(MicrolocalEntry {
                    orbit: t.orbits[i].label.clone(),
                    param: o.label.clone(),
                    element,
                    trace: ring.from_coeffs(&[v]),
                    provenance: MicroProvenance::UserSupplied,
                });
            }
        }
    }
    out
}

/// The unipotent orbit table of `GL(3)`, which has closures not flagged smooth.
pub fn gl3_unipotent_table() -> Result<OrbitTable> {
    table(&unipotent(3), Ambient::Gl { n: 3 })
}

/// The diagonal element `(1, z, z^2)` with `z` a primitive cube root of unity.
pub fn order_three_element() -> CycloMatrix {
    CycloMatrix::diag(&[Cyclotomic::root_of_unity(3, 0), Cyclotomic::root_of_unity(3, 1), Cyclotomic::root_of_unity(3, 2)])
}

/// `GL(3)` at the unipotent parameter with user-supplied decomposition rows and
/// microlocal entries, one of them off-diagonal and nonzero, matched on both sides. The
/// endoscopic element is [`order_three_element`], which centralizes `y`.
pub fn gl3_user_supplied() -> Result<MatchedFixture> {
    let gt = gl3_unipotent_table()?;
    let s = order_three_element();
    let m = inner_order(&s, ORDER_SEARCH_BOUND).expect("finite order");
    let ring = RootOfUnityRing::new(m as u32)?;
    let rows = supplied_rows(&gt);
    let extra = supplied_entries(&gt, ring);
    let perm = sigma_action(&gt, &s, None)?;
    let map = restriction_orbit_map(&gt, &gt)?;
    let g = ParameterSpace::with_user_data(gt.clone(), Some(&perm), ring, Conventions::default(), &rows, &extra)?;
    let h = ParameterSpace::with_user_data(gt, None, ring, Conventions::default(), &rows, &extra)?;
    let orbits = all_orbits(&g, &h, &map);
    Ok(MatchedFixture {
        name: "gl3-user-supplied",
        g,
        h,
        orbit_map: map,
        orbits,
        untwisted: true,
    })
}

/// Every matched fixture.
pub fn all_fixtures() -> Result<Vec<MatchedFixture>> {
    Ok(vec![gl2_unipotent()?, gl2_discrete_series()?, gl4_levi_product()?, gl3_user_supplied()?])
}

/// Rows from the smooth rule for every orbit of a table, when all closures are smooth.
pub fn smooth_rows(t: &OrbitTable) -> Result<Vec<ChiRow>> {
    labels_for(t, None).iter().map(|l| chi_row_smooth(l, t)).collect()
}
