use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use twendo_core::geom_params::OrbitTable;
use twendo_testkit::certify::{certify_table, check_split};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn twendo(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_twendo"));
    cmd.args(args).env_remove("TWENDO_CACHE_DIR");
    if let Some(c) = cache {
        cmd.env("TWENDO_CACHE_DIR", c);
    }
    cmd.output().expect("binary runs")
}

fn with_config(name: &str, args: &[&str], cache: Option<&Path>) -> Output {
    let cfg = configs().join(name);
    let mut all = vec!["--config", cfg.to_str().unwrap()];
    all.extend_from_slice(args);
    twendo(&all, cache)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn endo_data_counts() {
    for (n, count) in [("1", 1), ("2", 2), ("3", 2), ("4", 3)] {
        let out = twendo(&["endo-data", "-N", n], None);
        assert_eq!(code(&out), 0, "N = {n}");
        let doc = json(&out);
        assert_eq!(doc["result"]["data"].as_array().unwrap().len(), count, "N = {n}");
        assert_eq!(doc["passed"], true);
    }
}

#[test]
fn endo_data_rank_from_config_or_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("n.json");
    std::fs::write(&cfg, r#"{ "n": 2 }"#).unwrap();
    let out = twendo(&["--config", cfg.to_str().unwrap(), "endo-data"], None);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["result"]["data"].as_array().unwrap().len(), 2);
}

#[test]
fn zero_rank_is_a_usage_error() {
    let out = twendo(&["endo-data", "-N", "0"], None);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
    let missing = twendo(&["endo-data"], None);
    assert_eq!(code(&missing), 2);
}

#[test]
fn json_carries_schema_and_conventions() {
    let doc = json(&twendo(&["endo-data", "-N", "2"], None));
    assert_eq!(doc["schema_version"], 1);
    let conv = &doc["conventions"];
    assert_eq!(conv["pairing_sign"], 1);
    for key in ["pairing", "tilde_j", "point"] {
        assert!(conv[key].as_str().is_some_and(|s| !s.is_empty()), "{key}");
    }
}

#[test]
fn gl2_orbits() {
    let out = with_config("gl2.json", &["orbits"], None);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let orbits = doc["result"]["orbits"].as_array().unwrap();
    assert_eq!(orbits.len(), 3);
    let mut dims: Vec<u64> = orbits.iter().map(|o| o["dim"].as_u64().unwrap()).collect();
    dims.sort();
    assert_eq!(dims, vec![0, 0, 1]);
}

#[test]
fn signature_two_one_is_certified() {
    let cache = tempfile::tempdir().unwrap();
    let out = with_config("gl3_clans.json", &["closure"], Some(cache.path()));
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let cert = check_split(&[true, true, false]).unwrap();
    let orbits = doc["result"]["orbits"].as_array().unwrap();
    assert_eq!(orbits.len(), cert.clans.len());
    let mut got: Vec<u64> = orbits.iter().map(|o| o["dim"].as_u64().unwrap()).collect();
    let mut want: Vec<u64> = cert.dimensions.iter().map(|&d| d as u64).collect();
    got.sort();
    want.sort();
    assert_eq!(got, want);
    let strict = cert
        .leq
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().filter(|&(j, &b)| b && i != j).count())
        .sum::<usize>();
    assert_eq!(doc["result"]["closure_pairs"].as_array().unwrap().len(), strict);

    // The cached artifact itself passes the oracle.
    let files: Vec<_> = std::fs::read_dir(cache.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    let table: OrbitTable = serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
    certify_table(&table).unwrap();
}

#[test]
fn cached_rerun_is_byte_identical() {
    let cache = tempfile::tempdir().unwrap();
    let fresh = with_config("gl2.json", &["orbits"], None);
    let first = with_config("gl2.json", &["orbits"], Some(cache.path()));
    assert!(std::fs::read_dir(cache.path()).unwrap().count() > 0);
    let second = with_config("gl2.json", &["orbits"], Some(cache.path()));
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(fresh.stdout, first.stdout);

    let flag = with_config(
        "gl2.json",
        &["--cache-dir", cache.path().to_str().unwrap(), "orbits"],
        None,
    );
    assert_eq!(flag.stdout, first.stdout);
}

#[test]
fn verify_gl2_passes() {
    let out = twendo(&["verify-gl2"], None);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_eq!(doc["passed"], true);
    assert!(doc["result"]["first_failure"].is_null());
}

#[test]
fn verify_gl2_mutations_fail_at_their_checkpoints() {
    for (m, at, sign) in [("sign-flip", "pairing vectors", -1), ("off-diagonal", "eta_G", 1)] {
        let out = twendo(&["verify-gl2", "--mutation", m], None);
        assert_eq!(code(&out), 1, "{m}");
        let doc = json(&out);
        assert_eq!(doc["passed"], false);
        assert_eq!(doc["result"]["first_failure"], at, "{m}");
        assert_eq!(doc["conventions"]["pairing_sign"], sign, "{m}");
    }
}

#[test]
fn lift_config_passes() {
    let out = with_config("lift_gl2.json", &["lift"], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn torus_config_passes() {
    let out = with_config("torus_swap.json", &["equivariance-check"], None);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn invalid_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.json", r#"{ "bogus": 1 }"#),
        ("syntax.json", "{ not json"),
        ("tilde.json", r#"{ "tilde_j": "other" }"#),
    ];
    for (name, text) in cases {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        let out = twendo(&["--config", p.to_str().unwrap(), "orbits"], None);
        assert_eq!(code(&out), 2, "{name}");
    }
    let missing = twendo(&["--config", "/nonexistent/config.json", "orbits"], None);
    assert_eq!(code(&missing), 2);
    let no_parameter = twendo(&["orbits"], None);
    assert_eq!(code(&no_parameter), 2);
}

#[test]
fn table_format() {
    let out = with_config("gl2.json", &["--format", "table", "orbits"], None);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# orbits (schema 1)"));
    assert!(serde_json::from_str::<Value>(&text).is_err());
}
