use std::sync::OnceLock;

use num_traits::Signed;
use proptest::prelude::*;
use twendo_core::cyclotomic::{CycloMatrix, Cyclotomic};
use twendo_core::error::Error;
use twendo_core::geom_params::*;
use twendo_core::lifting::*;
use twendo_core::scalar::{rat, Int, Ring};
use twendo_testkit::fixtures::{self, MatchedFixture};

fn fixtures() -> &'static [MatchedFixture] {
    static CELL: OnceLock<Vec<MatchedFixture>> = OnceLock::new();
    CELL.get_or_init(|| fixtures::all_fixtures().unwrap())
}

fn fixture(name: &str) -> &'static MatchedFixture {
    fixtures().iter().find(|f| f.name == name).unwrap()
}

fn unipotent_psi(n: usize, target: &str) -> AParameter {
    AParameter {
        summands: vec![ASummand {
            weil: WeilSummand::Character { sign: false },
            sl2_dim: n,
        }],
        target: target.into(),
    }
}

fn table_for(psi: &AParameter, ambient: Ambient) -> OrbitTable {
    let point = parameter_point(&a_to_l_parameter(psi).unwrap()).unwrap();
    build_orbit_table(&InfinitesimalCharacter::new(point.flat_rep.clone()), &point, &ambient).unwrap()
}

fn ints(v: &[i64]) -> Vec<Int> {
    v.iter().map(|&x| Int::from(x)).collect()
}

fn zeta_strings(v: &[ZetaSum]) -> Vec<String> {
    v.iter().map(|z| z.to_string()).collect()
}

#[test]
fn zeta_sums_are_formal() {
    let r = RootOfUnityRing::new(4).unwrap();
    let a = r.zeta(1);
    let b = &a * &a;
    assert_eq!(b, r.zeta(2));
    assert_eq!(&b * &b, r.one());
    // 1 + z^2 evaluates to zero at i but is a nonzero group-ring element.
    let c = &r.one() + &r.zeta(2);
    assert!(!c.is_zero());
    assert!(c.evaluate().is_zero());
    assert_eq!(r.zeta(-1), r.zeta(3));
    assert_eq!(r.from_coeffs(&[1, -2]).to_string(), "1 - 2*z^1");
    assert_eq!(r.zeta(3).as_group_element(), Some(3));
    assert_eq!(r.from_int(&Int::from(5)).as_integer(), Some(Int::from(5)));
    let other = RootOfUnityRing::new(2).unwrap();
    assert!(a.try_add(&other.one()).is_err());
    assert!(RootOfUnityRing::new(0).is_err());
    let json = serde_json::to_string(&r.from_coeffs(&[0, 1, 0, -1])).unwrap();
    let back: ZetaSum = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r.from_coeffs(&[0, 1, 0, -1]));
}

#[test]
fn smooth_rows_for_gl2() {
    let t = table_for(&unipotent_psi(2, "GL(2)"), Ambient::Gl { n: 2 });
    let labels = labels_for(&t, None);
    let open = t.index_of("11").unwrap();
    let row = chi_row_smooth(&labels[open], &t).unwrap();
    assert_eq!(row.entries, ints(&[-1, -1, -1]));
    assert_eq!(row.provenance, ChiProvenance::SmoothClosure);
    let closed = chi_row_smooth(&labels[0], &t).unwrap();
    assert_eq!(closed.entries, ints(&[1, 0, 0]));
    let chi = ChiMatrix::build(&t, &labels, &[]).unwrap();
    assert_eq!(chi.determinant().abs(), Int::from(1));
    chi.validate(&t).unwrap();
}

#[test]
fn rows_are_required_where_closures_are_not_known_smooth() {
    let t = fixtures::gl3_unipotent_table().unwrap();
    let labels = labels_for(&t, None);
    let err = ChiMatrix::build(&t, &labels, &[]).unwrap_err();
    assert!(matches!(err, Error::MissingEntry(_)), "{err}");
    let rows = fixtures::supplied_rows(&t);
    assert!(!rows.is_empty());
    let chi = ChiMatrix::build(&t, &labels, &rows).unwrap();
    assert!(chi.rows.iter().any(|r| r.provenance == ChiProvenance::UserSupplied));
}

#[test]
fn invalid_rows_are_rejected() {
    let t = table_for(&unipotent_psi(2, "GL(2)"), Ambient::Gl { n: 2 });
    let labels = labels_for(&t, None);
    let doubled = ChiRow {
        label: "11".into(),
        entries: ints(&[-1, -1, -2]),
        provenance: ChiProvenance::UserSupplied,
    };
    assert!(ChiMatrix::build(&t, &labels, &[doubled]).is_err());
    let outside = ChiRow {
        label: "+-".into(),
        entries: ints(&[1, 1, 0]),
        provenance: ChiProvenance::UserSupplied,
    };
    assert!(ChiMatrix::build(&t, &labels, &[outside]).is_err());
}

#[test]
fn pairing_of_irreducibles() {
    let f = fixture("gl2-unipotent");
    let l = &f.g.labels;
    assert_eq!(pair_irreducibles(&l[0], &l[0], &f.g).unwrap(), Int::from(1));
    assert_eq!(pair_irreducibles(&l[2], &l[2], &f.g).unwrap(), Int::from(-1));
    assert_eq!(pair_irreducibles(&l[0], &l[2], &f.g).unwrap(), Int::from(0));
    let mut flipped = f.g.clone();
    flipped.conventions.pairing_sign = -1;
    assert_eq!(pair_irreducibles(&l[0], &l[0], &flipped).unwrap(), Int::from(-1));
    let missing = CompleteParamLabel::trivial("nowhere");
    assert!(pair_irreducibles(&missing, &l[0], &f.g).is_err());
}

#[test]
fn pairing_in_either_basis_agrees() {
    let f = fixture("gl2-unipotent");
    let c = eta_mic("+-", &f.g, ComponentElement::Identity).unwrap();
    let p = f.g.basis(2);
    let mu = p.in_basis(SheafBasis::Constructible, &f.g).unwrap();
    assert_eq!(mu.terms.terms.len(), 3);
    assert_eq!(pair(&c, &p, &f.g).unwrap(), pair(&c, &mu, &f.g).unwrap());
    let back = mu.in_basis(SheafBasis::Perverse, &f.g).unwrap();
    assert_eq!(back, p);
}

#[test]
fn canonical_normalization() {
    let f = fixture("gl2-unipotent");
    let ring = f.g.ring;
    let l = &f.g.labels[2];
    let c = canonical_sigma(l, &f.g, &ring.one()).unwrap();
    assert!(c.is_canonical);
    assert_eq!(c.rescaling, ring.one());
    let c = canonical_sigma(l, &f.g, &ring.zeta(1)).unwrap();
    assert!(!c.is_canonical);
    assert_eq!(c.rescaling, ring.zeta(-1));
    assert!(canonical_sigma(l, &f.g, &ring.from_coeffs(&[2])).is_err());

    // A twist swapping the two closed orbits fixes only the open one.
    let swapped = ParameterSpace::from_rules(f.g.table.clone(), Some(&[1, 0, 2]), ring, Conventions::default()).unwrap();
    let moved = &swapped.labels[0];
    assert!(!moved.sigma_fixed);
    assert!(matches!(canonical_sigma(moved, &swapped, &ring.one()), Err(Error::NotSigmaFixed(_))));
    assert!(matches!(eta_mic_twisted_g("+-", &swapped), Err(Error::NotSigmaFixed(_))));
    let e = eta_mic_twisted_g("11", &swapped).unwrap();
    assert!(e.terms.terms.keys().all(|k| k.sigma_fixed));
}

#[test]
fn microlocal_characters_on_gl2() {
    let f = fixture("gl2-unipotent");
    let base = eta_mic("+-", &f.g, ComponentElement::Identity).unwrap();
    assert_eq!(base, Combination::single(f.g.labels[0].clone(), Int::from(1)));
    let open = eta_mic("11", &f.g, ComponentElement::Identity).unwrap();
    assert_eq!(open, Combination::single(f.g.labels[2].clone(), Int::from(1)));
    let tw = eta_mic_twisted_g("+-", &f.g).unwrap();
    assert_eq!(tw, tensor_one(&base, f.g.ring));
}

#[test]
fn off_diagonal_entries_enter_the_characters() {
    let f = fixture("gl3-user-supplied");
    let placed: Vec<_> = f
        .g
        .mic
        .entries
        .iter()
        .filter(|e| e.provenance == MicroProvenance::UserSupplied && !e.trace.is_zero())
        .collect();
    assert!(!placed.is_empty());
    let e = placed[0];
    let eta = eta_mic(&e.orbit, &f.g, ComponentElement::Identity).unwrap();
    let param = f.g.label_of_orbit(&e.param).unwrap();
    assert!(eta.coefficient(param).is_some());
    assert!(eta.terms.len() >= 2);
}

#[test]
fn missing_entries_are_reported() {
    let t = fixtures::gl3_unipotent_table().unwrap();
    let ring = RootOfUnityRing::new(1).unwrap();
    let rows = fixtures::supplied_rows(&t);
    let g = ParameterSpace::with_user_data(t.clone(), None, ring, Conventions::default(), &rows, &[]).unwrap();
    let needs = t.orbits.iter().position(|o| o.closure_smooth.is_none()).unwrap();
    let below = t.closure_of(needs).into_iter().find(|&i| i != needs).unwrap();
    let err = eta_mic(&t.orbits[below].label, &g, ComponentElement::Identity).unwrap_err();
    assert!(matches!(err, Error::MissingEntry(_)), "{err}");
}

#[test]
fn a_packets() {
    let psi = unipotent_psi(2, "GL(2)");
    let f = fixture("gl2-unipotent");
    let packet = a_packet(&psi, &f.g).unwrap();
    assert_eq!(packet, vec![f.g.labels[f.g.table.base_orbit].clone()]);

    let ds = AParameter {
        summands: vec![ASummand {
            weil: WeilSummand::DiscreteSeries { k: 1 },
            sl2_dim: 1,
        }],
        target: "GL(2)".into(),
    };
    let f = fixture("gl2-discrete-series");
    let s = parameter_orbit(&ds, &f.g.table).unwrap();
    assert_eq!(f.g.table.orbits[s].dimension, 1);
    assert_eq!(a_packet(&ds, &f.g).unwrap(), vec![f.g.labels[s].clone()]);

    // A parameter with a different y is rejected.
    assert!(parameter_orbit(&unipotent_psi(2, "GL(2)"), &f.g.table).is_err());
}

#[test]
fn restriction_to_the_torus() {
    let psi = unipotent_psi(2, "GL(2)");
    let gt = table_for(&psi, Ambient::Gl { n: 2 });
    let ht = table_for(&psi, Ambient::Levi { sizes: vec![1, 1] });
    assert_eq!(ht.len(), 1);
    let map = restriction_orbit_map(&ht, &gt).unwrap();
    let ring = RootOfUnityRing::new(2).unwrap();
    let g = ParameterSpace::from_rules(gt.clone(), None, ring, Conventions::default()).unwrap();
    let h = ParameterSpace::from_rules(ht, None, ring, Conventions::default()).unwrap();
    let image = |i: usize| restrict_untwisted(&g.basis(i), &map, &g, &h).unwrap();
    let base = gt.base_orbit;
    let other = 1 - base;
    assert_eq!(image(base).terms, Combination::single(h.labels[0].clone(), Int::from(1)));
    assert!(image(other).terms.is_zero());
    assert_eq!(image(2).terms, Combination::single(h.labels[0].clone(), Int::from(-1)));
    let tw = restrict_sheaf_class(&g.twisted_basis(2), &map, &g, &h).unwrap();
    assert_eq!(tw, tensor_one_sheaf(&image(2), ring));
}

#[test]
fn restriction_on_matched_fixtures_preserves_indices() {
    for f in fixtures() {
        for i in 0..f.g.labels.len() {
            if !f.g.labels[i].sigma_fixed {
                continue;
            }
            let r = restrict_sheaf_class(&f.g.twisted_basis(i), &f.orbit_map, &f.g, &f.h).unwrap();
            let j = f.orbit_map.iter().position(|&x| x == i).unwrap();
            assert_eq!(r.terms, f.h.twisted_basis(j).terms, "{} {i}", f.name);
        }
    }
}

#[test]
fn lifting_identity_on_matched_fixtures() {
    assert!(fixtures().len() >= 4);
    for f in fixtures() {
        assert!(!f.orbits.is_empty());
        for (ho, go) in &f.orbits {
            let (eh, eg) = f.etas(ho, go).unwrap();
            let r = lift_and_verify(&eh, &eg, &f.g, &f.h, &f.orbit_map).unwrap();
            assert!(r.passed(), "{} {ho}: {:?}", f.name, r.mismatches);
            assert_eq!(r.checks.len(), f.g.labels.iter().filter(|l| l.sigma_fixed).count());
        }
    }
}

#[test]
fn single_coefficient_mutations_are_detected() {
    for f in fixtures() {
        let ring = f.g.ring;
        for (ho, go) in &f.orbits {
            let (eh, eg) = f.etas(ho, go).unwrap();
            for l in f.g.labels.iter().filter(|l| l.sigma_fixed) {
                for delta in [ring.one(), -&ring.one(), ring.zeta(1)] {
                    let mut bad = eg.clone();
                    let mut extra = Combination::single(l.clone(), delta.clone());
                    extra = bad.terms.plus(&extra);
                    bad.terms = extra;
                    let r = lift_and_verify(&eh, &bad, &f.g, &f.h, &f.orbit_map).unwrap();
                    assert_eq!(r.mismatches, vec![l.clone()], "{} {ho} {l} {delta}", f.name);
                }
            }
        }
    }
}

#[test]
fn lifting_rejects_mixed_rings() {
    let f = fixture("gl2-unipotent");
    let (eh, eg) = f.etas("+-", "+-").unwrap();
    let other = RootOfUnityRing::new(4).unwrap();
    let foreign = tensor_one(&eta_mic("+-", &f.g, ComponentElement::Identity).unwrap(), other);
    assert!(lift_and_verify(&eh, &foreign, &f.g, &f.h, &f.orbit_map).is_err());
    assert!(lift_and_verify(&eh, &eg, &f.g, &f.h, &f.orbit_map[..2]).is_err());
}

#[test]
fn gl2_end_to_end() {
    let r = verify_gl2(None).unwrap();
    assert!(r.passed(), "{:?}", r.checkpoints);
    assert_eq!(r.checkpoints.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), GL2_CHECKPOINTS);
    assert_eq!(r.g_orbits.iter().map(|o| o.1).collect::<Vec<_>>(), [0, 0, 1]);
    assert_eq!(r.h_orbits.iter().map(|o| o.1).collect::<Vec<_>>(), [0, 0, 1]);
    assert_eq!(r.pairing_g, ["1", "0", "0"]);
    assert_eq!(r.pairing_h, ["1", "0", "0"]);
    assert_eq!(r.eta_h, [("1_PGL(2,R)".to_string(), "1".to_string())]);
    assert_eq!(r.eta_g, [("1_GL(2,R)".to_string(), "1".to_string())]);
    assert_eq!(r.a_packet_g, ["1_GL(2,R)"]);
    assert_eq!(r.a_packet_h, ["1_PGL(2,R)"]);
    assert_eq!(r.sigma_order, 2);
    assert_eq!(zeta_strings(&r.lift.g_vector()), r.pairing_g);
}

#[test]
fn gl2_sign_flip_fails_at_the_pairing() {
    let r = verify_gl2(Some(Gl2Mutation::SignFlip)).unwrap();
    assert!(!r.passed());
    let first = r.checkpoints.iter().find(|c| !c.passed).unwrap();
    assert_eq!(first.name, "pairing vectors");
    assert_eq!(r.pairing_g, ["-1", "0", "0"]);
}

#[test]
fn gl2_off_diagonal_fails_at_eta_g() {
    let r = verify_gl2(Some(Gl2Mutation::OffDiagonal)).unwrap();
    assert!(!r.passed());
    let first = r.checkpoints.iter().find(|c| !c.passed).unwrap();
    assert_eq!(first.name, "eta_G");
    assert!(!r.lift.passed());
}

fn assert_degenerates(report: &DegenerationReport, m: u32) {
    assert_eq!(report.m, m);
    assert!(report.checks.len() > 3);
    for c in &report.checks {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
}

#[test]
fn degeneration_with_a_torus() {
    let psi = unipotent_psi(2, "GL(2)");
    let gt = table_for(&psi, Ambient::Gl { n: 2 });
    let ht = table_for(&psi, Ambient::Levi { sizes: vec![1, 1] });
    let s = CycloMatrix::diag(&[Cyclotomic::from_i64(1), Cyclotomic::from_i64(-1)]);
    let r = standard_endoscopy_degenerate(&gt, &ht, &s, (&[], &[]), (&[], &[])).unwrap();
    assert_degenerates(&r, 2);
}

#[test]
fn degeneration_with_a_levi_product() {
    let f = fixture("gl4-levi-product");
    let s = CycloMatrix::diag(&[1, 1, -1, -1].map(Cyclotomic::from_i64));
    let r = standard_endoscopy_degenerate(&f.g.table, &f.h.table, &s, (&[], &[]), (&[], &[])).unwrap();
    assert_degenerates(&r, 2);
}

#[test]
fn degeneration_with_supplied_data() {
    let t = fixtures::gl3_unipotent_table().unwrap();
    let ring = RootOfUnityRing::new(3).unwrap();
    let rows = fixtures::supplied_rows(&t);
    let entries = fixtures::supplied_entries(&t, ring);
    let s = fixtures::order_three_element();
    let r = standard_endoscopy_degenerate(&t, &t, &s, (&rows, &rows), (&entries, &entries)).unwrap();
    assert_degenerates(&r, 3);
}

#[test]
fn degeneration_requires_a_fixed_y() {
    let psi = unipotent_psi(2, "GL(2)");
    let gt = table_for(&psi, Ambient::Gl { n: 2 });
    let w = CycloMatrix::from_rows(vec![
        vec![Cyclotomic::from_i64(0), Cyclotomic::from_i64(1)],
        vec![Cyclotomic::from_i64(1), Cyclotomic::from_i64(0)],
    ])
    .unwrap();
    assert!(standard_endoscopy_degenerate(&gt, &gt, &w, (&[], &[]), (&[], &[])).is_err());
}

#[test]
fn finite_order_of_inner_automorphisms() {
    assert_eq!(inner_order(&fixtures::order_three_element(), 100), Some(3));
    assert_eq!(inner_order(&CycloMatrix::identity(3), 100), Some(1));
    let scalar = CycloMatrix::identity(2).scale(&Cyclotomic::root_of_unity(5, 1));
    assert_eq!(inner_order(&scalar, 100), Some(1));
    let free = CycloMatrix::diag(&[Cyclotomic::from_i64(1), Cyclotomic::from_rat(rat(2, 1))]);
    assert_eq!(inner_order(&free, 50), None);
}

#[test]
fn spaces_roundtrip_through_json() {
    let f = fixture("gl3-user-supplied");
    let json = serde_json::to_string(&f.g).unwrap();
    let back: ParameterSpace = serde_json::from_str(&json).unwrap();
    assert_eq!(back, f.g);
    let e = eta_mic_twisted_g("++-", &f.g).unwrap();
    let json = serde_json::to_string(&e).unwrap();
    let back: TwistedVirtualCharacter = serde_json::from_str(&json).unwrap();
    assert_eq!(back, e);
}

fn zeta_strategy(m: u32) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-3i64..=3, m as usize)
}

fn twisted_combination(f: &MatchedFixture, coeffs: &[Vec<i64>]) -> TwistedVirtualCharacter {
    let ring = f.g.ring;
    let mut terms = Combination::new();
    for (l, c) in f.g.labels.iter().zip(coeffs) {
        if l.sigma_fixed {
            terms.add_term(l.clone(), ring.from_coeffs(c));
        }
    }
    TwistedVirtualCharacter { ring, terms }
}

fn twisted_sheaf(f: &MatchedFixture, coeffs: &[Vec<i64>], basis: SheafBasis) -> TwistedSheafClass {
    let ring = f.g.ring;
    let mut terms = Combination::new();
    for (l, c) in f.g.labels.iter().zip(coeffs) {
        if l.sigma_fixed {
            terms.add_term(l.clone(), ring.from_coeffs(c));
        }
    }
    TwistedSheafClass { ring, basis, terms }
}

fn fixture_and_coeffs() -> impl Strategy<Value = (usize, Vec<Vec<i64>>, Vec<Vec<i64>>, Vec<Vec<i64>>, i64, i64)> {
    (0..fixtures().len()).prop_flat_map(|k| {
        let f = &fixtures()[k];
        let n = f.g.labels.len();
        let m = f.g.ring.m;
        (
            Just(k),
            prop::collection::vec(zeta_strategy(m), n),
            prop::collection::vec(zeta_strategy(m), n),
            prop::collection::vec(zeta_strategy(m), n),
            -4i64..=4,
            -4i64..=4,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chi_matrices_are_unimodular_with_unit_diagonal(k in 0..4usize) {
        let f = &fixtures()[k % fixtures().len()];
        for space in [&f.g, &f.h] {
            prop_assert_eq!(space.chi.determinant().abs(), Int::from(1));
            for i in 0..space.labels.len() {
                prop_assert_eq!(space.chi.entry(i, i).abs(), Int::from(1));
            }
            prop_assert!(space.chi.validate(&space.table).is_ok());
        }
    }

    #[test]
    fn irreducible_pairing_is_diagonal_and_unit(k in 0..4usize, sign in prop::bool::ANY) {
        let f = &fixtures()[k % fixtures().len()];
        let mut space = f.g.clone();
        space.conventions.pairing_sign = if sign { 1 } else { -1 };
        for a in &space.labels {
            for b in &space.labels {
                let v = pair_irreducibles(a, b, &space).unwrap();
                if a == b {
                    prop_assert_eq!(v.abs(), Int::from(1));
                } else {
                    prop_assert_eq!(v, Int::from(0));
                }
            }
        }
    }

    #[test]
    fn twisted_pairing_is_bilinear((k, c1, c2, s1, a, b) in fixture_and_coeffs(), constructible in prop::bool::ANY) {
        let f = &fixtures()[k];
        let ring = f.g.ring;
        let basis = if constructible { SheafBasis::Constructible } else { SheafBasis::Perverse };
        let x = twisted_combination(f, &c1);
        let y = twisted_combination(f, &c2);
        let p = twisted_sheaf(f, &s1, basis);
        let scaled = |t: &TwistedVirtualCharacter, c: i64| TwistedVirtualCharacter {
            ring,
            terms: {
                let mut out = Combination::new();
                for (l, v) in &t.terms.terms {
                    out.add_term(l.clone(), v.scale(&Int::from(c)));
                }
                out
            },
        };
        let sum = TwistedVirtualCharacter { ring, terms: scaled(&x, a).terms.plus(&scaled(&y, b).terms) };
        let lhs = pair_twisted(&sum, &p, &f.g).unwrap();
        let rhs = &pair_twisted(&x, &p, &f.g).unwrap().scale(&Int::from(a)) + &pair_twisted(&y, &p, &f.g).unwrap().scale(&Int::from(b));
        prop_assert_eq!(lhs, rhs);
        // Linearity in the sheaf slot, and compatibility with the group structure.
        let z = ring.zeta(1);
        let mut zp = p.clone();
        for v in zp.terms.terms.values_mut() {
            *v = &*v * &z;
        }
        let l2 = pair_twisted(&x, &zp, &f.g).unwrap();
        prop_assert_eq!(l2, &pair_twisted(&x, &p, &f.g).unwrap() * &z);
    }

    #[test]
    fn own_orbit_coefficient_is_positive(k in 0..4usize) {
        let f = &fixtures()[k % fixtures().len()];
        for space in [&f.g, &f.h] {
            for (i, o) in space.table.orbits.iter().enumerate() {
                let e = eta_mic(&o.label, space, ComponentElement::Identity).unwrap();
                let c = e.coefficient(&space.labels[i]).cloned().unwrap_or_default();
                prop_assert!(c > Int::from(0), "{} {}", f.name, o.label);
            }
        }
    }
}
