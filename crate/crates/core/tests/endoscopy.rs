use proptest::prelude::*;
use twendo_core::cyclotomic::{CycloMatrix, Cyclotomic};
use twendo_core::endoscopy::*;
use twendo_core::matrix::IntMatrix;
use twendo_core::rootdata::ClassicalKind;
use twendo_core::scalar::Field;

fn cm(rows: &[&[i64]]) -> CycloMatrix {
    CycloMatrix::from_int_matrix(&IntMatrix::from_i64(rows))
}

/// A few invertible test elements of GL_n with distinct entries.
fn test_elements(n: usize) -> Vec<CycloMatrix> {
    let mut out = Vec::new();
    let mut u = CycloMatrix::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            u[(i, j)] = Cyclotomic::from_i64((i + 2 * j + 1) as i64);
        }
    }
    out.push(u.clone());
    out.push(u.transpose());
    out.push(CycloMatrix::diag(&(0..n).map(|i| Cyclotomic::from_i64(i as i64 + 2)).collect::<Vec<_>>()));
    out.push(&u * &u.transpose());
    out
}

/// Applies `x -> s theta(x) s^{-1}` `k` times, straight from the definition.
fn iterate(s: &CycloMatrix, theta: &TwistingAutomorphismGL, x: &CycloMatrix, k: u64) -> CycloMatrix {
    let si = s.inverse().unwrap();
    let mut y = x.clone();
    for _ in 0..k {
        y = &(s * &theta.apply(&y).unwrap()) * &si;
    }
    y
}

#[test]
fn tilde_j_examples() {
    assert_eq!(make_tilde_j(1).unwrap(), IntMatrix::from_i64(&[&[1]]));
    assert_eq!(make_tilde_j(2).unwrap(), IntMatrix::from_i64(&[&[0, 1], &[-1, 0]]));
    // D = diag(1, -1, 1) times the antidiagonal.
    assert_eq!(
        make_tilde_j(3).unwrap(),
        IntMatrix::from_i64(&[&[0, 0, 1], &[0, -1, 0], &[1, 0, 0]])
    );
}

#[test]
fn twist_is_an_involution_up_to_twelve() {
    for n in 1..=12 {
        let t = TwistingAutomorphismGL::new(n).unwrap();
        assert!(t.is_involution(), "N = {n}");
    }
    for n in 1..=5 {
        let t = TwistingAutomorphismGL::new(n).unwrap();
        for x in test_elements(n) {
            assert_eq!(t.apply(&t.apply(&x).unwrap()).unwrap(), x);
        }
    }
}

#[test]
fn twist_preserves_the_whittaker_datum() {
    for n in 1..=8 {
        assert!(TwistingAutomorphismGL::new(n).unwrap().preserves_whittaker_datum(), "N = {n}");
    }
}

#[test]
fn datum_examples() {
    let d = make_endoscopic_datum(2, 0, 1).unwrap();
    assert!(d.s.is_identity());
    assert_eq!(d.fixed_algebra().unwrap().dimension, 3);
    assert_eq!(d.dual_group.blocks[0].kind, ClassicalKind::Sp);
    assert_eq!(d.gamma_form, GammaForm::Direct);

    let d = make_endoscopic_datum(2, 2, 0).unwrap();
    let f = d.fixed_algebra().unwrap();
    assert_eq!(f.dimension, 1);
    assert_eq!(f.center_basis.len(), 1);
    assert_eq!(d.gamma_form, GammaForm::Semidirect);

    let d = make_endoscopic_datum(3, 3, 0).unwrap();
    assert_eq!(d.fixed_algebra().unwrap().dimension, 3);
    assert_eq!(d.gamma_form, GammaForm::Direct);

    assert_eq!(make_endoscopic_datum(1, 1, 0).unwrap().fixed_algebra().unwrap().dimension, 0);
    assert_eq!(make_endoscopic_datum(4, 2, 1).unwrap().fixed_algebra().unwrap().dimension, 4);
}

#[test]
fn size_mismatch_is_rejected() {
    assert!(make_endoscopic_datum(3, 0, 1).is_err());
    assert!(make_endoscopic_datum(4, 1, 1).is_err());
}

#[test]
fn semisimplicity_examples() {
    assert!(check_semisimplicity(&CycloMatrix::identity(3), None).unwrap());
    let u = cm(&[&[1, 1], &[0, 1]]);
    assert!(!check_semisimplicity(&u, None).unwrap());
    let u3 = cm(&[&[1, 1, 0], &[0, 1, 1], &[0, 0, 1]]);
    assert!(!check_semisimplicity(&u3, None).unwrap());
    // A unipotent element composed with the twist is still not semisimple.
    let t = TwistingAutomorphismGL::new(2).unwrap();
    assert!(!check_semisimplicity(&u, Some(&t)).unwrap());
}

#[test]
fn every_datum_up_to_six_has_the_expected_type() {
    for n in 1..=6 {
        for d in enumerate_elliptic_data(n).unwrap() {
            let tag = format!("N = {n}, ({}, {})", d.n_o, d.n_s_prime);
            assert!(d.is_semisimple().unwrap(), "{tag}");
            let f = d.fixed_algebra().unwrap();
            let expected = d.n_o * d.n_o.saturating_sub(1) / 2 + d.n_s_prime * (2 * d.n_s_prime + 1);
            assert_eq!(f.dimension, expected, "{tag}");
            assert!(f.bracket_closed, "{tag}");
            assert!(d.fixed_algebra_matches_model().unwrap(), "{tag}");
            assert!(d.acts_trivially_on_fixed_algebra().unwrap(), "{tag}");
        }
    }
}

#[test]
fn enumeration_counts() {
    for n in 1..=8 {
        assert_eq!(enumerate_elliptic_data(n).unwrap().len(), n / 2 + 1);
    }
    let two: Vec<_> = enumerate_elliptic_data(2).unwrap().iter().map(|d| (d.n_o, d.n_s_prime)).collect();
    assert_eq!(two, vec![(0, 1), (2, 0)]);
    let one: Vec<_> = enumerate_elliptic_data(1).unwrap().iter().map(|d| (d.n_o, d.n_s_prime)).collect();
    assert_eq!(one, vec![(1, 0)]);
    assert_eq!(enumerate_elliptic_data(5).unwrap().len(), 3);
}

#[test]
fn endoscopic_group_labels() {
    let g = endoscopic_group(&make_endoscopic_datum(2, 0, 1).unwrap()).unwrap();
    assert_eq!(g.label, "SO(3)");
    assert_eq!(g.root_datum.rank, 1);
    assert!(g.second_invariant_trivial && g.first_invariants_compatible && g.whittaker_normalized);
    assert_eq!(endoscopic_group(&make_endoscopic_datum(3, 1, 1).unwrap()).unwrap().label, "SO(3)");
    assert_eq!(endoscopic_group(&make_endoscopic_datum(4, 2, 1).unwrap()).unwrap().label, "SO(2) x SO(3)");
    assert_eq!(endoscopic_group(&make_endoscopic_datum(5, 3, 1).unwrap()).unwrap().label, "Sp(2) x SO(3)");
    assert_eq!(endoscopic_group(&make_endoscopic_datum(4, 4, 0).unwrap()).unwrap().label, "SO(4)");
    assert_eq!(endoscopic_group(&make_endoscopic_datum(1, 1, 0).unwrap()).unwrap().label, "1");
    // H has the rank of its dual, which is floor(N/2).
    for n in 1..=6 {
        for d in enumerate_elliptic_data(n).unwrap() {
            assert_eq!(endoscopic_group(&d).unwrap().root_datum.rank, n / 2);
        }
    }
}

#[test]
fn finite_order_of_the_split_sl2_datum() {
    let d = make_endoscopic_datum(2, 0, 1).unwrap();
    let r = finite_order_replacement(&d).unwrap();
    assert!(!r.replaced);
    assert_eq!(r.order, 2);
    let theta = d.theta();
    let xs = test_elements(2);
    assert!(xs.iter().all(|x| iterate(&d.s, &theta, x, 2) == *x));
    // On SL_2 the twist is inner, so only elements of other determinant detect it.
    assert!(xs.iter().any(|x| iterate(&d.s, &theta, x, 1) != *x));
}

#[test]
fn orders_match_direct_iteration() {
    for n in 1..=5 {
        for d in enumerate_elliptic_data(n).unwrap() {
            let k = d.element_class.order.expect("standard elements have finite order");
            let theta = d.theta();
            let xs = test_elements(n);
            assert!(xs.iter().all(|x| iterate(&d.s, &theta, x, k) == *x));
            for j in 1..k {
                assert!(xs.iter().any(|x| iterate(&d.s, &theta, x, j) != *x), "N = {n}, j = {j}");
            }
        }
    }
}

#[test]
fn root_of_unity_shift_keeps_finite_order() {
    let s_std = standard_element(2, 0).unwrap();
    let z = CycloMatrix::diag(&[Cyclotomic::root_of_unity(3, 1), Cyclotomic::root_of_unity(3, 2)]);
    let d = TwistedEndoDatum::with_element(2, 0, &s_std * &z).unwrap();
    let r = finite_order_replacement(&d).unwrap();
    assert!(!r.replaced);
    assert_eq!(r.order, 6);
    let theta = d.theta();
    for x in test_elements(2) {
        assert_eq!(iterate(&d.s, &theta, &x, 6), x);
    }
    assert!(r.power_certificate.is_diagonal());
}

#[test]
fn infinite_order_shift_is_replaced() {
    let s_std = standard_element(2, 0).unwrap();
    let z = CycloMatrix::diag(&[Cyclotomic::from_i64(2), Cyclotomic::from_i64(2).inv().unwrap()]);
    let d = TwistedEndoDatum::with_element(2, 0, &s_std * &z).unwrap();
    assert_eq!(d.element_class.order, None);
    let r = finite_order_replacement(&d).unwrap();
    assert!(r.replaced);
    assert_eq!(r.datum.s, s_std);
    assert_eq!(&d.s * &r.central_shift, r.datum.s);
    assert!(d.fixed_algebra().unwrap().connected_center_contains(&r.central_shift).unwrap());
    // The replacement is equivalent to the original, witnessed by the identity.
    match data_equivalent(&d, &r.datum).unwrap() {
        Equivalence::Witness { g, central_shift } => {
            assert!(g.is_identity());
            assert_eq!(&r.datum.s * &central_shift, d.s);
        }
        other => panic!("expected a witness, got {other:?}"),
    }
    // And replacing again changes nothing.
    let again = finite_order_replacement(&r.datum).unwrap();
    assert!(!again.replaced);
}

#[test]
fn non_central_shift_has_no_certificate() {
    // diag(2, 1/2) is not central in Sp_2, so it cannot be absorbed.
    let z = CycloMatrix::diag(&[Cyclotomic::from_i64(2), Cyclotomic::from_i64(2).inv().unwrap()]);
    assert!(TwistedEndoDatum::with_element(2, 0, z.clone()).is_ok());
    let f = make_endoscopic_datum(2, 0, 1).unwrap().fixed_algebra().unwrap();
    assert!(!f.connected_center_contains(&z).unwrap());
    // -1 is central in Sp_2 but not in its identity component's exponential image.
    assert!(!f.connected_center_contains(&cm(&[&[-1, 0], &[0, -1]])).unwrap());
}

#[test]
fn equivalence_examples() {
    let a = make_endoscopic_datum(2, 0, 1).unwrap();
    let b = make_endoscopic_datum(2, 2, 0).unwrap();
    match data_equivalent(&a, &a).unwrap() {
        Equivalence::Witness { g, .. } => assert!(g.is_identity()),
        other => panic!("{other:?}"),
    }
    assert!(matches!(data_equivalent(&a, &b).unwrap(), Equivalence::Inequivalent { .. }));
    assert!(matches!(data_equivalent(&b, &a).unwrap(), Equivalence::Inequivalent { .. }));
}

#[test]
fn equivalence_is_reflexive_and_symmetric() {
    for n in 1..=4 {
        let all = enumerate_elliptic_data(n).unwrap();
        for x in &all {
            for y in &all {
                let xy = matches!(data_equivalent(x, y).unwrap(), Equivalence::Witness { .. });
                let yx = matches!(data_equivalent(y, x).unwrap(), Equivalence::Witness { .. });
                assert_eq!(xy, yx);
                assert_eq!(xy, x.n_o == y.n_o, "N = {n}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conjugated_data_are_equivalent(n in 1usize..=4, pick in 0usize..3, signs in 0u32..16, perm in 0usize..24) {
        let all = enumerate_elliptic_data(n).unwrap();
        let d = &all[pick % all.len()];
        let gs = candidate_conjugators(n);
        let g = &gs[(signs as usize * 24 + perm) % gs.len()];
        let theta = d.theta();
        let s2 = &(g * &d.s) * &theta.apply(g).unwrap().inverse().unwrap();
        let d2 = TwistedEndoDatum::with_element(d.n_o, d.n_s_prime, s2).unwrap();
        let w = data_equivalent(d, &d2).unwrap();
        prop_assert!(matches!(w, Equivalence::Witness { .. }), "{:?}", w);
    }

    #[test]
    fn replacement_is_idempotent(n in 1usize..=5, pick in 0usize..3) {
        let all = enumerate_elliptic_data(n).unwrap();
        let d = &all[pick % all.len()];
        let r = finite_order_replacement(d).unwrap();
        let again = finite_order_replacement(&r.datum).unwrap();
        prop_assert!(!again.replaced);
        prop_assert_eq!(again.order, r.order);
        let w = data_equivalent(d, &r.datum).unwrap();
        prop_assert!(matches!(w, Equivalence::Witness { .. }), "{:?}", w);
    }
}
