use proptest::prelude::*;
use twendo_core::cyclotomic::{CycloMatrix, Cyclotomic};
use twendo_core::matrix::IntMatrix;
use twendo_core::scalar::{rat, Rat};
use twendo_core::torus_llc::*;

fn q(v: &[(i64, i64)]) -> Vec<Rat> {
    v.iter().map(|&(a, b)| rat(a, b)).collect()
}

fn zi(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&a| rat(a, 1)).collect()
}

fn torus(a: &[&[i64]], z: Vec<Rat>) -> RealTorusDatum {
    RealTorusDatum::new(IntMatrix::from_i64(a), z, vec![]).unwrap()
}

#[test]
fn split_gl1_trivial_character() {
    let t = torus(&[&[1]], zi(&[0]));
    let g = t
        .llc_forward(&TorusQuasicharacterParam { d_pi: zi(&[0]), nu: zi(&[0]) })
        .unwrap();
    assert_eq!(g.y_exponent, zi(&[0]));
}

#[test]
fn split_gl1_sign_twist_moves_y() {
    let t = torus(&[&[1]], zi(&[0]));
    for s in [rat(0, 1), rat(1, 3), rat(-5, 2)] {
        let g0 = t
            .llc_forward(&TorusQuasicharacterParam { d_pi: vec![s.clone()], nu: zi(&[0]) })
            .unwrap();
        let g1 = t
            .llc_forward(&TorusQuasicharacterParam { d_pi: vec![s.clone()], nu: zi(&[1]) })
            .unwrap();
        assert!(!t.same_geometric(&g0, &g1));
        // The two exponents differ by 1/2: the sign character.
        assert_eq!(&g0.y_exponent[0] - &g1.y_exponent[0], rat(1, 2));
    }
}

#[test]
fn diagonal_torus_of_the_gl2_example() {
    let t = torus(&[&[1, 0], &[0, 1]], zi(&[0, 0]));
    let p = TorusQuasicharacterParam {
        d_pi: q(&[(1, 2), (-1, 2)]),
        nu: zi(&[1, 1]),
    };
    let g = t.llc_forward(&p).unwrap();
    let y = CycloMatrix::exp_diag(&g.y_exponent);
    let i = Cyclotomic::root_of_unity(4, 1);
    assert_eq!(y, CycloMatrix::diag(&[-i.clone(), i]));
    let back = t.llc_backward(&g).unwrap();
    assert!(t.same_quasicharacter(&back, &p));
}

#[test]
fn constraint_violations_are_rejected() {
    let t = torus(&[&[1]], zi(&[0]));
    let bad = TorusGeometricParam {
        lambda: zi(&[0]),
        y_exponent: q(&[(1, 3)]),
    };
    assert!(t.llc_backward(&bad).is_err());
    let bad_nu = TorusQuasicharacterParam {
        d_pi: zi(&[0]),
        nu: q(&[(1, 2)]),
    };
    assert!(t.llc_forward(&bad_nu).is_err());
}

#[test]
fn strong_real_form_descriptors() {
    let split = torus(&[&[1]], zi(&[0])).classify_strong_real_forms();
    assert!(split.descriptor.is_trivial());
    let compact = torus(&[&[-1]], zi(&[0])).classify_strong_real_forms();
    assert_eq!(compact.descriptor.divisible_rank, 1);
    let swap = torus(&[&[0, 1], &[1, 0]], zi(&[0, 0])).classify_strong_real_forms();
    assert_eq!(swap.descriptor.divisible_rank, 1);
    assert_eq!(swap.descriptor.rational_rank, 0);
    assert_eq!(swap.antifixed_basis.len(), 1);
}

#[test]
fn real_form_chain_round_trips() {
    for a in involution_class_representatives(3) {
        let t = RealTorusDatum::new(a, zi(&[0, 0, 0]), vec![]).unwrap();
        for e in [q(&[(1, 2), (1, 3), (-1, 4)]), q(&[(0, 1), (3, 2), (1, 1)])] {
            let c = t.real_form_class(&StrongRealForm { exponent: e });
            let k = t.class_to_character(&c).unwrap();
            let back = t.character_to_class(&k).unwrap();
            assert!(t.same_real_form_class(&c, &back));
        }
    }
}

#[test]
fn identity_pair_leaves_everything_unchanged() {
    let t = torus(&[&[1, 0], &[0, -1]], zi(&[0, 0]));
    let pair = ThetaPair::untwisted(IntMatrix::identity(2));
    let p = TorusQuasicharacterParam {
        d_pi: q(&[(1, 3), (2, 1)]),
        nu: zi(&[1, 2]),
    };
    let f = StrongRealFormClass { mu: q(&[(0, 1), (1, 2)]) };
    let (p2, f2) = t.act_on_rep_side(&pair, &p, &f).unwrap();
    assert_eq!((p2, f2), (p, f));
}

#[test]
fn swap_on_split_pair_swaps_coordinates() {
    let t = torus(&[&[1, 0], &[0, 1]], zi(&[0, 0]));
    let swap = IntMatrix::from_i64(&[&[0, 1], &[1, 0]]);
    let pair = ThetaPair::untwisted(swap);
    let p = TorusQuasicharacterParam {
        d_pi: q(&[(1, 3), (2, 1)]),
        nu: zi(&[1, 0]),
    };
    let f = StrongRealFormClass { mu: zi(&[0, 0]) };
    let (p2, _) = t.act_on_rep_side(&pair, &p, &f).unwrap();
    assert_eq!(p2.d_pi, q(&[(2, 1), (1, 3)]));
    assert_eq!(p2.nu, zi(&[0, 1]));
    let g = t.llc_forward(&p).unwrap();
    let k = t.class_to_character(&f).unwrap();
    let (g2, _) = t.act_on_param_side(&pair, &g, &k).unwrap();
    t.check_geometric(&g2).unwrap();
    assert_eq!(g2.lambda, p2.d_pi);
}

#[test]
fn inversion_on_compact_torus_negates_nu() {
    let t = torus(&[&[-1]], zi(&[0]));
    let pair = ThetaPair::untwisted(IntMatrix::from_i64(&[&[-1]]));
    let p = TorusQuasicharacterParam { d_pi: zi(&[3]), nu: zi(&[3]) };
    let f = StrongRealFormClass { mu: q(&[(1, 2)]) };
    let (p2, _) = t.act_on_rep_side(&pair, &p, &f).unwrap();
    assert!(t.same_quasicharacter(&p2, &TorusQuasicharacterParam { d_pi: zi(&[-3]), nu: zi(&[-3]) }));
}

#[test]
fn coboundary_twist_shifts_the_exponent_only() {
    let t = torus(&[&[0, 1], &[1, 0]], zi(&[0, 0]));
    let pair = ThetaPair {
        theta: IntMatrix::identity(2),
        theta_dual: IntMatrix::identity(2),
        cocycle: q(&[(1, 3), (-1, 3)]),
    };
    let p = TorusQuasicharacterParam { d_pi: q(&[(1, 2), (1, 2)]), nu: zi(&[0, 0]) };
    let g = t.llc_forward(&p).unwrap();
    let k = t.class_to_character(&StrongRealFormClass { mu: zi(&[0, 0]) }).unwrap();
    let (g2, _) = t.act_on_param_side(&pair, &g, &k).unwrap();
    assert_eq!(g2.y_exponent, vec![&g.y_exponent[0] - rat(1, 3), &g.y_exponent[1] + rat(1, 3)]);
    assert!(t.same_geometric(&g, &g2));
}

#[test]
fn incompatible_pairs_are_rejected() {
    let t = torus(&[&[1, 0], &[0, -1]], zi(&[0, 0]));
    let swap = IntMatrix::from_i64(&[&[0, 1], &[1, 0]]);
    assert!(t.check_pair(&ThetaPair::untwisted(swap.clone())).is_err());
    let mismatched = ThetaPair {
        theta: IntMatrix::identity(2),
        theta_dual: IntMatrix::from_i64(&[&[1, 0], &[0, -1]]),
        cocycle: zi(&[0, 0]),
    };
    assert!(t.verify_equivariance(&mismatched, 2).is_err());
}

#[test]
fn split_gl1_identity_commutes() {
    let t = torus(&[&[1]], zi(&[0]));
    let r = t.verify_equivariance(&ThetaPair::untwisted(IntMatrix::identity(1)), 3).unwrap();
    assert!(r.failures.is_empty());
    assert!(r.cases_checked > 0);
}

#[test]
fn rank_two_swap_torus_commutes() {
    let t = torus(&[&[0, 1], &[1, 0]], zi(&[0, 0]));
    let swap = IntMatrix::from_i64(&[&[0, 1], &[1, 0]]);
    let r = t.verify_equivariance(&ThetaPair::untwisted(swap), 3).unwrap();
    assert!(r.failures.is_empty(), "{:?}", r.failures);
}

#[test]
fn compact_torus_with_nontrivial_z_commutes() {
    let t = torus(&[&[-1]], q(&[(1, 2)]));
    let r = t.verify_equivariance(&ThetaPair::untwisted(IntMatrix::identity(1)), 3).unwrap();
    assert!(r.failures.is_empty());
    let inv = t.verify_equivariance(&ThetaPair::untwisted(IntMatrix::from_i64(&[&[-1]])), 3).unwrap();
    assert!(inv.failures.is_empty());
}

#[test]
fn non_coboundary_twist_breaks_equivariance() {
    // Split GL1 with cocycle 1/2: (1 + a) alpha is integral, but the twist moves the
    // conjugacy class of delta, and the sweep detects it.
    let t = torus(&[&[1]], zi(&[0]));
    let pair = ThetaPair {
        theta: IntMatrix::identity(1),
        theta_dual: IntMatrix::identity(1),
        cocycle: q(&[(1, 2)]),
    };
    assert!(t.check_pair(&pair).is_err());
    let grid = t.grid(2);
    let r = t.verify_unchecked(&pair, &grid).unwrap();
    assert!(!r.failures.is_empty());
}

#[test]
fn fast_sweep_agrees_with_reference_maps() {
    for n in 1..=2 {
        let perms = signed_permutations(n);
        for a in involution_class_representatives(n) {
            let t = RealTorusDatum::new(a, vec![rat(0, 1); n], vec![]).unwrap();
            let grid = t.grid(2);
            for theta in &perms {
                let pair = ThetaPair::untwisted(theta.clone());
                if t.check_pair(&pair).is_err() {
                    continue;
                }
                let fast = t.verify_on(&pair, &grid).unwrap();
                for p in &grid.params {
                    assert!(t.commutes_at(&pair, p).unwrap());
                }
                assert!(fast.failures.is_empty());
            }
        }
    }
}

#[test]
fn small_grid_has_no_failures_and_includes_twists() {
    let g = equivariance_grid(2, 3);
    assert!(g.failures.is_empty(), "{:?}", g.failures);
    assert!(g.twisted_pairs > 0);
}

fn param_strategy() -> impl Strategy<Value = (usize, Vec<i64>, Vec<i64>, Vec<i64>)> {
    (1usize..=3).prop_flat_map(|n| {
        (
            0..involution_class_representatives(n).len(),
            prop::collection::vec(-4i64..=4, n),
            prop::collection::vec(-4i64..=4, n),
            prop::collection::vec(-6i64..=6, n),
        )
            .prop_map(move |(k, l, f, c)| (k + 10 * n, l, f, c))
    })
}

fn build(code: usize, l: &[i64], f: &[i64]) -> (RealTorusDatum, TorusQuasicharacterParam) {
    let n = code / 10;
    let a = involution_class_representatives(n)[code % 10].clone();
    let t = RealTorusDatum::new(a.clone(), vec![rat(0, 1); n], vec![]).unwrap();
    // d_pi - nu must be a-fixed: take (1 + a) f / 2.
    let nu = zi(l);
    let fr: Vec<Rat> = f.iter().map(|&x| rat(x, 2)).collect();
    let d: Vec<Rat> = fr
        .iter()
        .zip(a.to_rat().mul_vec(&fr))
        .map(|(x, y)| (x + y) / rat(2, 1))
        .collect();
    let d_pi = nu.iter().zip(&d).map(|(x, y)| x + y).collect();
    (t, TorusQuasicharacterParam { d_pi, nu })
}

proptest! {
    #[test]
    fn forward_then_backward_is_identity((code, l, f, _c) in param_strategy()) {
        let (t, p) = build(code, &l, &f);
        let g = t.llc_forward(&p).unwrap();
        let back = t.llc_backward(&g).unwrap();
        prop_assert!(t.same_quasicharacter(&p, &back));
        let again = t.llc_forward(&back).unwrap();
        prop_assert!(t.same_geometric(&g, &again));
    }

    #[test]
    fn actions_preserve_validity((code, l, f, c) in param_strategy()) {
        let (t, p) = build(code, &l, &f);
        let n = t.rank();
        let perms = signed_permutations(n);
        let theta = perms[(c.iter().map(|x| x.unsigned_abs() as usize).sum::<usize>()) % perms.len()].clone();
        let pair = ThetaPair::untwisted(theta);
        prop_assume!(t.check_pair(&pair).is_ok());
        let f0 = StrongRealFormClass { mu: vec![rat(0, 1); n] };
        let (p2, _) = t.act_on_rep_side(&pair, &p, &f0).unwrap();
        prop_assert!(t.check_quasicharacter(&p2).is_ok());
        let k = t.class_to_character(&f0).unwrap();
        let (g2, _) = t.act_on_param_side(&pair, &t.llc_forward(&p).unwrap(), &k).unwrap();
        prop_assert!(t.check_geometric(&g2).is_ok());
    }
}
