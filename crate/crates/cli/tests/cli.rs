use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use ymspec::{parse_config, seeded_random_state};
use ymspec_core::algebra::build_algebra;
use ymspec_core::lattice::constraint_residual;

fn ymspec(args: &[&str], config: &str, dir: &Path) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_ymspec"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or(Value::Null)
}

#[test]
fn unknown_command_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ymspec(&["simulate"], r#"{"command": "evolve"}"#, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["kind"], "usage");
}

#[test]
fn command_must_match_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = ymspec(&["spectrum"], r#"{"command": "evolve"}"#, dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn negative_spacing_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = ymspec(&["evolve"], r#"{"command": "evolve", "lattice": {"spacing": -0.1}}"#, dir.path());
    assert_eq!(o.status.code(), Some(2));
    let d = stderr_json(&o);
    assert_eq!(d["kind"], "schema");
    assert_eq!(d["key"], "lattice.spacing");
}

#[test]
fn unknown_field_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ymspec(&["spectrum"], r#"{"command": "spectrum", "model": {"Nmax": 4}}"#, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["kind"], "schema");
}

#[test]
fn step_above_cfl_bound_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"command": "evolve", "lattice": {"n": 4, "spacing": 0.25},
                  "evolution": {"T": 1.0, "h": 0.2}}"#;
    let o = ymspec(&["evolve"], cfg, dir.path());
    assert_eq!(o.status.code(), Some(3));
    let d = stderr_json(&o);
    assert_eq!(d["kind"], "stability");
    assert_eq!(d["h"], 0.2);
    assert!(d["bound"].as_f64().unwrap() < 0.2);
}

#[test]
fn small_spectrum_run_succeeds_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"command": "spectrum", "model": {"N_max": 4, "n_max": 2, "samples": 20}}"#;
    let o = ymspec(&["spectrum"], cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let status: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(status["status"], "ok");
    let csv = fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,lambda,multiplicity,converged"));
    assert_eq!(csv.lines().count(), 4);
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/spectrum.json")).unwrap()).unwrap();
    assert!(report["results"]["gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn seeded_random_state_is_deterministic_and_satisfies_gauss_law() {
    let cfg = |seed: u64| {
        parse_config(&format!(
            r#"{{"command": "evolve", "seed": {seed}, "lattice": {{"n": 6, "spacing": 0.2, "amplitude": 0.3}}}}"#
        ))
        .unwrap()
    };
    let basis = build_algebra("su2").unwrap();
    let s0 = seeded_random_state(&cfg(0)).unwrap();
    let again = seeded_random_state(&cfg(0)).unwrap();
    let s1 = seeded_random_state(&cfg(1)).unwrap();
    assert_eq!(s0.a.data(), again.a.data());
    assert_eq!(s0.e.data(), again.e.data());
    assert_ne!(s0.e.data(), s1.e.data());
    let tol = cfg(0).tolerances.cg;
    let resid = constraint_residual(&basis, &s0.a, &s0.e).unwrap();
    assert!(resid < 10.0 * tol * s0.e.norm().max(1.0), "{resid}");
}
