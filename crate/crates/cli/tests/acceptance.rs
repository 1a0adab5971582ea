//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the libtest harness
//! so the lines are always printed; exits nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twendo_core::cyclotomic::{CycloMatrix, Cyclotomic};
use twendo_core::endoscopy::{
    enumerate_elliptic_data, finite_order_replacement, standard_element, TwistedEndoDatum, TwistingAutomorphismGL,
};
use twendo_core::geom_params::{
    a_to_l_parameter, build_orbit_table, enumerate_clans, parameter_point, ASummand, AParameter, Ambient,
    InfinitesimalCharacter, OrbitTable, WeilSummand,
};
use twendo_core::lifting::*;
use twendo_core::scalar::{Field, Int};
use twendo_core::torus_llc::equivariance_grid;
use twendo_testkit::certify::{check_split, splits};
use twendo_testkit::fixtures::{self, MatchedFixture};

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(t)
}

fn gl2_example() -> Verdict {
    let start = Instant::now();
    let r = verify_gl2(None).map_err(|e| e.to_string())?;
    let dims = |o: &[(String, usize)]| o.iter().map(|x| x.1).collect::<Vec<_>>();
    ensure(dims(&r.g_orbits) == [0, 0, 1] && dims(&r.h_orbits) == [0, 0, 1], || format!("orbits {:?} {:?}", r.g_orbits, r.h_orbits))?;
    ensure(r.pairing_g == ["1", "0", "0"] && r.pairing_h == ["1", "0", "0"], || {
        format!("pairing vectors {:?} {:?}", r.pairing_g, r.pairing_h)
    })?;
    ensure(r.eta_h == [("1_PGL(2,R)".to_string(), "1".to_string())], || format!("eta_H {:?}", r.eta_h))?;
    ensure(r.a_packet_g == ["1_GL(2,R)"] && r.a_packet_h == ["1_PGL(2,R)"], || {
        format!("A-packets {:?} {:?}", r.a_packet_g, r.a_packet_h)
    })?;
    ensure(r.passed(), || format!("{:?}", r.checkpoints))?;
    let t = within(start, Duration::from_secs(1))?;

    let bin = env!("CARGO_BIN_EXE_twendo");
    let run = |args: &[&str]| Command::new(bin).args(args).output().map_err(|e| e.to_string());
    let ok = run(&["verify-gl2"])?;
    ensure(ok.status.code() == Some(0), || format!("verify-gl2 exit {:?}", ok.status.code()))?;
    for (m, at) in [("sign-flip", "pairing vectors"), ("off-diagonal", "eta_G")] {
        let out = run(&["verify-gl2", "--mutation", m])?;
        ensure(out.status.code() == Some(1), || format!("{m}: exit {:?}", out.status.code()))?;
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        ensure(v["result"]["first_failure"] == at, || format!("{m} first fails at {}", v["result"]["first_failure"]))?;
    }
    Ok(format!("orbits (0,0,1) on both sides, pairing (1,0,0) both sides, eta_H = (1_PGL(2,R), 1), mutations caught; {t:.2?}"))
}

fn test_elements(n: usize) -> Vec<CycloMatrix> {
    let mut u = CycloMatrix::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            u[(i, j)] = Cyclotomic::from_i64((i + 2 * j + 1) as i64);
        }
    }
    let d = CycloMatrix::diag(&(0..n).map(|i| Cyclotomic::from_i64(i as i64 + 2)).collect::<Vec<_>>());
    vec![u.clone(), u.transpose(), d, &u * &u.transpose()]
}

/// `x -> s theta(x) s^{-1}` applied `k` times.
fn iterate(s: &CycloMatrix, theta: &TwistingAutomorphismGL, x: &CycloMatrix, k: u64) -> CycloMatrix {
    let si = s.inverse().expect("invertible");
    let mut y = x.clone();
    for _ in 0..k {
        y = &(s * &theta.apply(&y).expect("square")) * &si;
    }
    y
}

fn certify_replacement(d: &TwistedEndoDatum) -> Result<bool, String> {
    let r = finite_order_replacement(d).map_err(|e| e.to_string())?;
    let s = &r.datum.s;
    let theta = r.datum.theta();
    let c = &r.power_certificate;
    ensure(c.is_diagonal() && c.diagonal().windows(2).all(|w| w[0] == w[1]), || "power certificate is not scalar".into())?;
    for x in test_elements(d.n) {
        ensure(iterate(s, &theta, &x, r.order) == x, || format!("order {} does not return to the identity", r.order))?;
    }
    Ok(r.replaced)
}

fn endoscopic_data() -> Verdict {
    let start = Instant::now();
    let mut count = 0;
    for n in 1..=8 {
        let data = enumerate_elliptic_data(n).map_err(|e| e.to_string())?;
        ensure(data.len() == n / 2 + 1, || format!("N = {n}: {} data", data.len()))?;
        for d in &data {
            let tag = format!("N = {n}, ({}, {})", d.n_o, d.n_s_prime);
            ensure(d.is_semisimple().map_err(|e| e.to_string())?, || format!("{tag} not semisimple"))?;
            let f = d.fixed_algebra().map_err(|e| e.to_string())?;
            let expected = d.n_o * d.n_o.saturating_sub(1) / 2 + d.n_s_prime * (2 * d.n_s_prime + 1);
            ensure(f.dimension == expected, || format!("{tag}: fixed algebra {} vs {expected}", f.dimension))?;
            ensure(!certify_replacement(d)?, || format!("{tag}: standard element was replaced"))?;
            count += 1;
        }
    }
    // An element of infinite order is replaced and the result certified.
    let s = standard_element(2, 0).map_err(|e| e.to_string())?;
    let two = Cyclotomic::from_i64(2);
    let z = CycloMatrix::diag(&[two.clone(), two.inv().expect("nonzero")]);
    let d = TwistedEndoDatum::with_element(2, 0, &s * &z).map_err(|e| e.to_string())?;
    ensure(certify_replacement(&d)?, || "infinite-order element was kept".into())?;
    let t = within(start, Duration::from_secs(10))?;
    Ok(format!("{count} data for N <= 8 semisimple with exact fixed dimensions, replacements certified; {t:.2?}"))
}

fn torus_grid() -> Verdict {
    let start = Instant::now();
    let g = equivariance_grid(4, 3);
    ensure(g.failures.is_empty(), || format!("{} failures, first {:?}", g.failures.len(), g.failures.first()))?;
    ensure(g.twisted_pairs > 0, || "no cocycle-twisted pair".into())?;
    let t = within(start, Duration::from_secs(60))?;
    Ok(format!(
        "{} tori, {} pairs ({} twisted), {} cases, 0 failures; {t:.2?}",
        g.tori, g.pairs, g.twisted_pairs, g.cases_checked
    ))
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

fn orbit_tables() -> Verdict {
    let start = Instant::now();
    let mut checked = 0;
    let mut orbits = 0;
    for n in 1..=4 {
        for plus in splits(n) {
            let p = plus.iter().filter(|&&x| x).count();
            let q = n - p;
            let cert = check_split(&plus)?;
            let formula: usize = (0..=p.min(q))
                .map(|k| factorial(n) / (factorial(p - k) * factorial(q - k) * factorial(k) * (1 << k)))
                .sum();
            ensure(cert.clans.len() == formula && enumerate_clans(p, q).len() == formula, || {
                format!("({p}, {q}): {} clans, formula {formula}", cert.clans.len())
            })?;
            checked += 1;
            orbits += cert.clans.len();
        }
    }
    let t = within(start, Duration::from_secs(120))?;
    Ok(format!("{checked} splits with p+q <= 4, {orbits} orbits: counts, dimensions and closure agree over F_2 and F_3; {t:.2?}"))
}

fn unipotent(n: usize) -> AParameter {
    AParameter {
        summands: vec![ASummand {
            weil: WeilSummand::Character { sign: false },
            sl2_dim: n,
        }],
        target: format!("GL({n})"),
    }
}

fn table_for(psi: &AParameter, ambient: Ambient) -> Result<OrbitTable, String> {
    let point = parameter_point(&a_to_l_parameter(psi).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    build_orbit_table(&InfinitesimalCharacter::new(point.flat_rep.clone()), &point, &ambient).map_err(|e| e.to_string())
}

fn all_spaces(fx: &[MatchedFixture]) -> Result<Vec<(String, ParameterSpace)>, String> {
    let mut out = Vec::new();
    for f in fx {
        out.push((format!("{} G", f.name), f.g.clone()));
        out.push((format!("{} H", f.name), f.h.clone()));
    }
    let torus = table_for(&unipotent(2), Ambient::Levi { sizes: vec![1, 1] })?;
    let ring = RootOfUnityRing::new(2).map_err(|e| e.to_string())?;
    out.push((
        "GL(1) x GL(1)".into(),
        ParameterSpace::from_rules(torus, None, ring, Conventions::default()).map_err(|e| e.to_string())?,
    ));
    Ok(out)
}

fn random_zeta(rng: &mut ChaCha8Rng, ring: RootOfUnityRing) -> ZetaSum {
    let coeffs: Vec<i64> = (0..ring.m).map(|_| rng.gen_range(-3..=3)).collect();
    ring.from_coeffs(&coeffs)
}

fn random_character(rng: &mut ChaCha8Rng, space: &ParameterSpace) -> TwistedVirtualCharacter {
    let mut terms = Combination::new();
    for l in space.labels.iter().filter(|l| l.sigma_fixed) {
        terms.add_term(l.clone(), random_zeta(rng, space.ring));
    }
    TwistedVirtualCharacter { ring: space.ring, terms }
}

fn random_sheaf(rng: &mut ChaCha8Rng, space: &ParameterSpace, basis: SheafBasis) -> TwistedSheafClass {
    let mut terms = Combination::new();
    for l in space.labels.iter().filter(|l| l.sigma_fixed) {
        terms.add_term(l.clone(), random_zeta(rng, space.ring));
    }
    TwistedSheafClass {
        ring: space.ring,
        basis,
        terms,
    }
}

fn scaled(c: &TwistedVirtualCharacter, k: &ZetaSum) -> TwistedVirtualCharacter {
    let mut terms = Combination::new();
    for (l, v) in &c.terms.terms {
        terms.add_term(l.clone(), v * k);
    }
    TwistedVirtualCharacter { ring: c.ring, terms }
}

fn pairing_properties(fx: &[MatchedFixture]) -> Verdict {
    let spaces = all_spaces(fx)?;
    let one = Int::from(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e11d0);
    let mut trials = 0;
    for (name, space) in &spaces {
        ensure(space.chi.determinant().magnitude() == one.magnitude(), || format!("{name}: det {}", space.chi.determinant()))?;
        space.chi.validate(&space.table).map_err(|e| format!("{name}: {e}"))?;
        for i in 0..space.labels.len() {
            ensure(space.chi.entry(i, i).magnitude() == one.magnitude(), || format!("{name}: diagonal entry {i}"))?;
            for j in 0..space.labels.len() {
                let v = pair_irreducibles(&space.labels[i], &space.labels[j], space).map_err(|e| e.to_string())?;
                let ok = if i == j { v.magnitude() == one.magnitude() } else { v == Int::from(0) };
                ensure(ok, || format!("{name}: pairing ({i}, {j}) = {v}"))?;
            }
        }
        for _ in 0..40 {
            let basis = if rng.gen_bool(0.5) { SheafBasis::Perverse } else { SheafBasis::Constructible };
            let (x, y) = (random_character(&mut rng, space), random_character(&mut rng, space));
            let (p, q) = (random_sheaf(&mut rng, space, basis), random_sheaf(&mut rng, space, basis));
            let (a, b) = (random_zeta(&mut rng, space.ring), random_zeta(&mut rng, space.ring));
            let pr = |c: &TwistedVirtualCharacter, s: &TwistedSheafClass| pair_twisted(c, s, space).map_err(|e| e.to_string());
            let combo = TwistedVirtualCharacter {
                ring: space.ring,
                terms: scaled(&x, &a).terms.plus(&scaled(&y, &b).terms),
            };
            let left = pr(&combo, &p)?;
            let right = &(&pr(&x, &p)? * &a) + &(&pr(&y, &p)? * &b);
            ensure(left == right, || format!("{name}: not linear in the character"))?;
            let sum = TwistedSheafClass {
                ring: space.ring,
                basis,
                terms: p.terms.plus(&q.terms),
            };
            ensure(pr(&x, &sum)? == &pr(&x, &p)? + &pr(&x, &q)?, || format!("{name}: not additive in the sheaf"))?;
            trials += 1;
        }
    }
    Ok(format!("{} tables: |det chi| = 1, unit diagonals, diagonal +-1 pairing; {trials} random Z[U_m] bilinearity trials", spaces.len()))
}

fn lifting(fx: &[MatchedFixture]) -> Verdict {
    let r = verify_gl2(None).map_err(|e| e.to_string())?;
    ensure(r.lift.passed(), || format!("GL(2): {:?}", r.lift.mismatches))?;
    let synthetic = fx.iter().filter(|f| !f.name.starts_with("gl2-unipotent")).count();
    ensure(synthetic >= 3, || format!("only {synthetic} synthetic fixtures"))?;
    let mut runs = 0;
    let mut mutations = 0;
    for f in fx {
        for (ho, go) in &f.orbits {
            let (eh, eg) = f.etas(ho, go).map_err(|e| e.to_string())?;
            let rep = lift_and_verify(&eh, &eg, &f.g, &f.h, &f.orbit_map).map_err(|e| e.to_string())?;
            ensure(rep.passed(), || format!("{} at {ho}: {:?}", f.name, rep.mismatches))?;
            runs += 1;
            for l in f.g.labels.iter().filter(|l| l.sigma_fixed) {
                let mut bad = eg.clone();
                bad.terms = bad.terms.plus(&Combination::single(l.clone(), f.g.ring.one()));
                let rep = lift_and_verify(&eh, &bad, &f.g, &f.h, &f.orbit_map).map_err(|e| e.to_string())?;
                ensure(rep.mismatches == [l.clone()], || format!("{} at {ho}: mutation at {l} gave {:?}", f.name, rep.mismatches))?;
                mutations += 1;
            }
        }
    }
    Ok(format!("GL(2) and {synthetic} synthetic fixtures: {runs} runs with zero mismatches, {mutations}/{mutations} mutations detected"))
}

fn degeneration(fx: &[MatchedFixture]) -> Verdict {
    let mut reports = Vec::new();
    let torus = table_for(&unipotent(2), Ambient::Levi { sizes: vec![1, 1] })?;
    let gl2 = table_for(&unipotent(2), Ambient::Gl { n: 2 })?;
    let c = |v: i64| Cyclotomic::from_i64(v);
    reports.push(("GL(2) / torus", standard_endoscopy_degenerate(&gl2, &torus, &CycloMatrix::diag(&[c(1), c(-1)]), (&[], &[]), (&[], &[]))));
    for f in fx.iter().filter(|f| f.untwisted) {
        let (g, h) = (&f.g.table, &f.h.table);
        let s = if f.g.ring.m == 1 {
            let n = g.ambient.size();
            CycloMatrix::diag(&(0..n).map(|i| c(if i < n / 2 { 1 } else { -1 })).collect::<Vec<_>>())
        } else {
            fixtures::order_three_element()
        };
        let rows_g = f.g.chi.rows.iter().filter(|r| r.provenance == ChiProvenance::UserSupplied).cloned().collect::<Vec<_>>();
        let rows_h = f.h.chi.rows.iter().filter(|r| r.provenance == ChiProvenance::UserSupplied).cloned().collect::<Vec<_>>();
        let user = |s: &ParameterSpace| s.mic.entries.iter().filter(|e| e.provenance == MicroProvenance::UserSupplied).cloned().collect::<Vec<_>>();
        let (mg, mh) = (user(&f.g), user(&f.h));
        reports.push((f.name, standard_endoscopy_degenerate(g, h, &s, (&rows_g, &rows_h), (&mg, &mh))));
    }
    let mut total = 0;
    for (name, r) in &reports {
        let r = r.as_ref().map_err(|e| format!("{name}: {e}"))?;
        if let Some(c) = r.checks.iter().find(|c| !c.passed) {
            return Err(format!("{name}: {} {}", c.name, c.detail));
        }
        total += r.checks.len();
    }
    Ok(format!("{} fixtures, {total} comparisons: twisted outputs equal untwisted outputs tensored with 1", reports.len()))
}

fn main() -> ExitCode {
    let fx = match fixtures::all_fixtures() {
        Ok(f) => f,
        Err(e) => {
            println!("FAIL fixtures: {e}");
            return ExitCode::FAILURE;
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict>)> = vec![
        ("1 GL(2) example", Box::new(gl2_example)),
        ("2 endoscopic data", Box::new(endoscopic_data)),
        ("3 torus equivariance grid", Box::new(torus_grid)),
        ("4 orbit tables p+q <= 4", Box::new(orbit_tables)),
        ("5 pairing and chi properties", Box::new(|| pairing_properties(&fx))),
        ("6 lifting identity", Box::new(|| lifting(&fx))),
        ("7 degeneration", Box::new(|| degeneration(&fx))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
