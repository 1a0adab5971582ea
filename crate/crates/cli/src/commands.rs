//! The subcommands. Each returns a JSON body, a plain-text rendering and a verdict.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};
use twendo_core::cyclotomic::CycloMatrix;
use twendo_core::endoscopy::{
    endoscopic_group, enumerate_elliptic_data, finite_order_replacement, make_endoscopic_datum, twisted_order,
    TwistingAutomorphismGL, ORDER_SEARCH_BOUND, TILDE_J_CONVENTION,
};
use twendo_core::geom_params::{
    a_to_l_parameter, apply_sigma, build_orbit_table, parameter_point, restriction_orbit_map, sigma_action, Ambient,
    GeometricParameterPoint, InfinitesimalCharacter, OrbitTable, POINT_CONVENTION,
};
use twendo_core::lifting::{
    eta_mic_twisted_g, eta_mic_twisted_h, inner_order, lift_and_verify, verify_gl2, ChiRow, ComponentElement, Conventions,
    Gl2Mutation, MicrolocalEntry, ParameterSpace, RootOfUnityRing, TwistedVirtualCharacter, PAIRING_SIGN_CONVENTION,
};
use twendo_core::scalar::fmt_rat;
use twendo_core::torus_llc::{equivariance_grid, ThetaPair};

use crate::config::{Loaded, ParameterSpec, SideConfig};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub struct Outcome {
    pub command: &'static str,
    pub body: Value,
    pub text: String,
    pub passed: bool,
    pub pairing_sign: i8,
}

impl Outcome {
    fn new(command: &'static str, body: Value, text: String, passed: bool) -> Self {
        Outcome {
            command,
            body,
            text,
            passed,
            pairing_sign: Conventions::default().pairing_sign,
        }
    }

    /// The full JSON document: schema version, conventions, verdict and body.
    pub fn document(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "conventions": {
                "pairing_sign": self.pairing_sign,
                "pairing": PAIRING_SIGN_CONVENTION,
                "tilde_j": TILDE_J_CONVENTION,
                "point": POINT_CONVENTION,
            },
            "passed": self.passed,
            "result": self.body,
        })
    }

    pub fn render_table(&self) -> String {
        let mut out = format!("# {} (schema {})\n", self.command, SCHEMA_VERSION);
        let _ = writeln!(out, "# pairing sign {}: {}", self.pairing_sign, PAIRING_SIGN_CONVENTION);
        let _ = writeln!(out, "# {TILDE_J_CONVENTION}");
        let _ = writeln!(out, "# {POINT_CONVENTION}");
        out.push_str(&self.text);
        let _ = writeln!(out, "{}", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}

fn ser<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

pub fn endo_data(n: Option<usize>, loaded: &Loaded) -> Result<Outcome, CliError> {
    let n = n
        .or(loaded.config.n)
        .ok_or_else(|| CliError::Usage("endo-data needs --N or \"n\" in the configuration".into()))?;
    if n == 0 {
        return Err(CliError::Usage("N must be positive".into()));
    }
    let mut data = Vec::new();
    let mut text = String::new();
    let mut passed = true;
    for d in enumerate_elliptic_data(n)? {
        let fixed = d.fixed_algebra()?;
        let semisimple = d.is_semisimple()?;
        let matches = d.fixed_algebra_matches_model()?;
        let group = endoscopic_group(&d)?;
        let fin = finite_order_replacement(&d)?;
        let ok = semisimple && matches && fixed.dimension == d.expected_dimension() && fixed.bracket_closed;
        passed &= ok;
        let _ = writeln!(
            text,
            "({}, {})  H = {:<18} dim {:>3} (expected {:>3})  semisimple {}  order {}{}",
            d.n_o,
            d.n_s_prime,
            group.label,
            fixed.dimension,
            d.expected_dimension(),
            semisimple,
            fin.order,
            if fin.replaced { "  replaced" } else { "" }
        );
        data.push(json!({
            "n_o": d.n_o,
            "n_s_prime": d.n_s_prime,
            "s": ser(&d.s),
            "endoscopic_group": group.label,
            "factors": ser(&group.factors),
            "dual_group": ser(&d.dual_group),
            "gamma_form": ser(&d.gamma_form),
            "fixed_algebra_dimension": fixed.dimension,
            "expected_dimension": d.expected_dimension(),
            "center_dimension": fixed.center_basis.len(),
            "bracket_closed": fixed.bracket_closed,
            "semisimple": semisimple,
            "fixed_algebra_matches_model": matches,
            "whittaker_normalized": group.whittaker_normalized,
            "finite_order": {
                "order": fin.order,
                "replaced": fin.replaced,
                "power_certificate": ser(&fin.power_certificate),
                "central_shift": ser(&fin.central_shift),
            },
        }));
    }
    Ok(Outcome::new("endo-data", json!({ "n": n, "data": data }), text, passed))
}

/// The element acting on orbits and the order of the automorphism it defines.
struct Twist {
    s: CycloMatrix,
    theta: Option<TwistingAutomorphismGL>,
    order: u64,
}

fn twist_for(loaded: &Loaded, n: usize) -> Result<Option<Twist>, CliError> {
    let c = &loaded.config;
    if let Some(pair) = c.endoscopic_pair {
        let d = make_endoscopic_datum(n, pair.n_o, pair.n_s_prime)?;
        let theta = d.theta();
        let order = twisted_order(&d.s, &theta, ORDER_SEARCH_BOUND)?
            .ok_or_else(|| CliError::Config("the twisted element has no small finite order".into()))?;
        return Ok(Some(Twist {
            s: d.s,
            theta: Some(theta),
            order,
        }));
    }
    if let Some(s) = &c.inner_element {
        if s.rows() != n || !s.is_square() {
            return Err(CliError::Config(format!("inner_element must be {n} x {n}")));
        }
        let order = inner_order(s, ORDER_SEARCH_BOUND)
            .ok_or_else(|| CliError::Config("inner_element has no small finite order".into()))?;
        return Ok(Some(Twist {
            s: s.clone(),
            theta: None,
            order,
        }));
    }
    Ok(None)
}

fn point_of(loaded: &Loaded) -> Result<GeometricParameterPoint, CliError> {
    let spec = loaded
        .config
        .parameter
        .as_ref()
        .ok_or_else(|| CliError::Config("a \"parameter\" is required".into()))?;
    let l = match spec {
        ParameterSpec::A(psi) => {
            psi.validate()?;
            a_to_l_parameter(psi)?
        }
        ParameterSpec::L(l) => l.clone(),
    };
    Ok(parameter_point(&l)?)
}

/// Builds a table, or reads it from the cache directory when present.
fn cached_table(
    ambient: &Ambient,
    point: &GeometricParameterPoint,
    twist: Option<&Twist>,
    cache: Option<&Path>,
) -> Result<OrbitTable, CliError> {
    if ambient.size() != point.y.rows() {
        return Err(CliError::Config(format!(
            "ambient {} has size {}, the parameter has size {}",
            ambient.label(),
            ambient.size(),
            point.y.rows()
        )));
    }
    let key = format!(
        "{}{}",
        OrbitTable::cache_key(ambient, point, twist.map(|t| &t.s)),
        if twist.is_some_and(|t| t.theta.is_some()) { "-twisted" } else { "" }
    );
    let file = cache.map(|d| d.join(format!("{key}.json")));
    if let Some(f) = &file {
        if let Ok(text) = std::fs::read_to_string(f) {
            if let Ok(t) = serde_json::from_str::<OrbitTable>(&text) {
                return Ok(t);
            }
        }
    }
    let ic = InfinitesimalCharacter::new(point.flat_rep.clone());
    let mut t = build_orbit_table(&ic, point, ambient)?;
    if let Some(tw) = twist {
        let perm = sigma_action(&t, &tw.s, tw.theta.as_ref())?;
        apply_sigma(&mut t, &perm);
    }
    if let (Some(dir), Some(f)) = (cache, &file) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
        let text = serde_json::to_string(&t).expect("serializable");
        std::fs::write(f, text).map_err(|e| CliError::Io(f.display().to_string(), e))?;
    }
    Ok(t)
}

fn main_table(loaded: &Loaded, cache: Option<&Path>) -> Result<OrbitTable, CliError> {
    let point = point_of(loaded)?;
    let n = point.y.rows();
    let ambient = loaded.config.ambient.clone().unwrap_or(Ambient::Gl { n });
    let twist = twist_for(loaded, ambient.size())?;
    cached_table(&ambient, &point, twist.as_ref(), cache)
}

fn closure_pairs(t: &OrbitTable) -> Vec<[String; 2]> {
    t.closure_pairs
        .iter()
        .map(|&(a, b)| [t.orbits[a].label.clone(), t.orbits[b].label.clone()])
        .collect()
}

fn table_header(t: &OrbitTable) -> Value {
    json!({
        "ambient": t.ambient.label(),
        "lambda": t.lambda.iter().map(fmt_rat).collect::<Vec<_>>(),
        "blocks": t.blocks.iter().map(|b| json!({"coords": b.coords, "signature": b.signature()})).collect::<Vec<_>>(),
        "base_orbit": t.orbits[t.base_orbit].label,
    })
}

pub fn orbits(loaded: &Loaded, cache: Option<&Path>) -> Result<Outcome, CliError> {
    let t = main_table(loaded, cache)?;
    let mut body = table_header(&t);
    body["orbits"] = t
        .orbits
        .iter()
        .map(|o| {
            json!({
                "label": o.label,
                "clans": o.clans.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "dim": o.dimension,
                "component_group": o.component_group.order,
                "sigma_image": o.sigma_image,
                "closure_smooth": o.closure_smooth,
            })
        })
        .collect();
    body["closure_pairs"] = ser(&closure_pairs(&t));
    let mut text = format!("{} at lambda ({})\n", t.ambient.label(), t.lambda.iter().map(fmt_rat).collect::<Vec<_>>().join(", "));
    let _ = writeln!(text, "{:<16} {:>4} {:>6} {:<16}", "orbit", "dim", "|A|", "sigma image");
    for o in &t.orbits {
        let _ = writeln!(text, "{:<16} {:>4} {:>6} {:<16}", o.label, o.dimension, o.component_group.order, o.sigma_image);
    }
    let _ = writeln!(text, "{} orbits", t.len());
    Ok(Outcome::new("orbits", body, text, true))
}

pub fn closure(loaded: &Loaded, cache: Option<&Path>) -> Result<Outcome, CliError> {
    let t = main_table(loaded, cache)?;
    let mut body = table_header(&t);
    let mut text = String::new();
    let _ = writeln!(text, "{:<16} {:>4} {:<8} closure", "orbit", "dim", "smooth");
    body["orbits"] = t
        .orbits
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let below: Vec<String> = t.closure_of(j).into_iter().map(|i| t.orbits[i].label.clone()).collect();
            let smooth = match o.closure_smooth {
                Some(true) => "yes",
                Some(false) => "no",
                None => "?",
            };
            let _ = writeln!(text, "{:<16} {:>4} {:<8} {}", o.label, o.dimension, smooth, below.join(" "));
            json!({ "label": o.label, "dim": o.dimension, "closure": below, "closure_smooth": o.closure_smooth })
        })
        .collect();
    body["closure_pairs"] = ser(&closure_pairs(&t));
    body["dense_orbits"] = t.dense_orbits().iter().map(|&i| t.orbits[i].label.clone()).collect();
    Ok(Outcome::new("closure", body, text, true))
}

fn side_table(
    side: &SideConfig,
    default_ambient: Option<&Ambient>,
    point: &GeometricParameterPoint,
    loaded: &Loaded,
    cache: Option<&Path>,
) -> Result<OrbitTable, CliError> {
    if let Some(p) = &side.table {
        return loaded.read_json(p);
    }
    let ambient = side
        .ambient
        .clone()
        .or_else(|| default_ambient.cloned())
        .ok_or_else(|| CliError::Config("each side needs an ambient or a table".into()))?;
    cached_table(&ambient, point, None, cache)
}

fn side_space(
    side: &SideConfig,
    table: OrbitTable,
    sigma: Option<&[usize]>,
    ring: RootOfUnityRing,
    loaded: &Loaded,
) -> Result<ParameterSpace, CliError> {
    let rows: Vec<ChiRow> = match &side.chi_rows {
        Some(p) => loaded.read_json(p)?,
        None => Vec::new(),
    };
    let entries: Vec<MicrolocalEntry> = match &side.microlocal {
        Some(p) => loaded.read_json(p)?,
        None => Vec::new(),
    };
    Ok(ParameterSpace::with_user_data(table, sigma, ring, Conventions::default(), &rows, &entries)?)
}

fn terms(e: &TwistedVirtualCharacter) -> Value {
    e.terms
        .terms
        .iter()
        .map(|(l, c)| json!({ "label": l.to_string(), "coefficient": c.to_string() }))
        .collect()
}

pub fn lift(loaded: &Loaded, cache: Option<&Path>) -> Result<Outcome, CliError> {
    let cfg = loaded
        .config
        .lift
        .as_ref()
        .ok_or_else(|| CliError::Config("lift needs a \"lift\" section".into()))?;
    let point = point_of(loaded)?;
    let n = point.y.rows();
    let g_default = loaded.config.ambient.clone().unwrap_or(Ambient::Gl { n });
    let g_table = side_table(&cfg.g, Some(&g_default), &point, loaded, cache)?;
    let h_table = side_table(&cfg.h, None, &point, loaded, cache)?;
    let twist = twist_for(loaded, g_table.ambient.size())?;
    let (perm, m) = match &twist {
        Some(t) => (Some(sigma_action(&g_table, &t.s, t.theta.as_ref())?), t.order),
        None => (None, 1),
    };
    let ring = RootOfUnityRing::new(m as u32)?;
    let orbit_map = restriction_orbit_map(&h_table, &g_table)?;
    let g = side_space(&cfg.g, g_table, perm.as_deref(), ring, loaded)?;
    let h = side_space(&cfg.h, h_table, None, ring, loaded)?;
    let g_orbit = cfg.g.orbit.clone().unwrap_or_else(|| g.table.orbits[g.table.base_orbit].label.clone());
    let h_orbit = cfg.h.orbit.clone().unwrap_or_else(|| h.table.orbits[h.table.base_orbit].label.clone());
    let eta_h = eta_mic_twisted_h(&h_orbit, &h, ComponentElement::Sigma)?;
    let eta_g = eta_mic_twisted_g(&g_orbit, &g)?;
    let report = lift_and_verify(&eta_h, &eta_g, &g, &h, &orbit_map)?;

    let strings = |v: Vec<twendo_core::lifting::ZetaSum>| v.iter().map(|z| z.to_string()).collect::<Vec<_>>();
    let pairing_g = strings(report.g_vector());
    let pairing_h = strings(report.h_vector());
    let mut text = format!("m = {m}, eta_H at {h_orbit}, eta_G at {g_orbit}\n");
    let _ = writeln!(text, "{:<16} {:>16} {:>16}", "sheaf", "G side", "H side");
    for c in &report.checks {
        let mark = if c.g_side == c.h_side { "" } else { "  MISMATCH" };
        let _ = writeln!(text, "{:<16} {:>16} {:>16}{mark}", c.sheaf.to_string(), c.g_side.to_string(), c.h_side.to_string());
    }
    let body = json!({
        "m": m,
        "g": { "ambient": g.table.ambient.label(), "orbit": g_orbit, "eta": terms(&eta_g), "pairing": pairing_g },
        "h": { "ambient": h.table.ambient.label(), "orbit": h_orbit, "eta": terms(&eta_h), "pairing": pairing_h },
        "orbit_map": orbit_map
            .iter()
            .enumerate()
            .map(|(i, &j)| [h.table.orbits[i].label.clone(), g.table.orbits[j].label.clone()])
            .collect::<Vec<_>>(),
        "checks": report.checks.iter().map(|c| json!({
            "sheaf": c.sheaf.to_string(),
            "g": c.g_side.to_string(),
            "h": c.h_side.to_string(),
        })).collect::<Vec<_>>(),
        "mismatches": report.mismatches.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
    });
    Ok(Outcome::new("lift", body, text, report.passed()))
}

pub fn verify_gl2_cmd(mutation: Option<Gl2Mutation>) -> Result<Outcome, CliError> {
    let r = verify_gl2(mutation)?;
    let mut text = String::new();
    for c in &r.checkpoints {
        let _ = writeln!(text, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let first_failure = r.checkpoints.iter().find(|c| !c.passed).map(|c| c.name.clone());
    let mut body = ser(&r);
    body["mutation"] = ser(&mutation);
    body["first_failure"] = ser(&first_failure);
    let mut out = Outcome::new("verify-gl2", body, text, r.passed());
    if mutation == Some(Gl2Mutation::SignFlip) {
        out.pairing_sign = -1;
    }
    Ok(out)
}

pub fn equivariance_check(loaded: &Loaded, max_rank: usize, bound: Option<u32>) -> Result<Outcome, CliError> {
    if let Some(tc) = &loaded.config.torus {
        tc.datum.validate()?;
        let pair = tc.theta.clone().unwrap_or_else(|| {
            let n = tc.datum.rank();
            ThetaPair::untwisted(twendo_core::matrix::IntMatrix::identity(n))
        });
        let b = bound.unwrap_or(tc.bound);
        let r = tc.datum.verify_equivariance(&pair, b)?;
        let text = format!("{} cases checked, {} failures\n", r.cases_checked, r.failures.len());
        let passed = r.failures.is_empty();
        return Ok(Outcome::new(
            "equivariance-check",
            json!({ "bound": b, "cases_checked": r.cases_checked, "failures": r.failures }),
            text,
            passed,
        ));
    }
    if max_rank == 0 {
        return Err(CliError::Usage("--max-rank must be positive".into()));
    }
    let b = bound.unwrap_or(2);
    let r = equivariance_grid(max_rank, b);
    let text = format!(
        "{} tori, {} pairs ({} twisted), {} cases checked, {} failures\n",
        r.tori,
        r.pairs,
        r.twisted_pairs,
        r.cases_checked,
        r.failures.len()
    );
    let passed = r.failures.is_empty();
    let mut body = ser(&r);
    body["max_rank"] = json!(max_rank);
    body["bound"] = json!(b);
    Ok(Outcome::new("equivariance-check", body, text, passed))
}
