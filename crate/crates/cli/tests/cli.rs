use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn hgt(args: &[&str]) -> Output {
    hgt_env(args, None)
}

fn hgt_env(args: &[&str], tol: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hgt"));
    cmd.args(args).env_remove("HGT_TOLERANCES");
    if let Some(t) = tol {
        cmd.env("HGT_TOLERANCES", t);
    }
    cmd.output().expect("hgt runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_stdout(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("bad report ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn json_file(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn registry_module_validates() {
    let o = hgt(&["validate-module", "identity-su2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json_stdout(&o);
    assert_eq!(r["passed"], true);
    assert!(r["result"]["worst"].as_f64().unwrap() <= 1e-10);
    assert_eq!(r["config"]["subcommand"], "validate-module");
}

#[test]
fn exported_module_file_validates() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("modules");
    let o = hgt(&["registry", "export", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let file = out.join("identity-su2.json");
    let o = hgt(&["validate-module", file.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let by_name = json_stdout(&hgt(&["validate-module", "identity-su2"]));
    assert_eq!(json_stdout(&o)["module_hash"], by_name["module_hash"]);
}

#[test]
fn missing_file_exits_with_two() {
    let o = hgt(&["validate-module", "/nonexistent/identity-su2.json"]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("/nonexistent/identity-su2.json"),
        "{}",
        stderr(&o)
    );
    let o = hgt(&["fix-gauge2", "--conn", "/nonexistent/instance.json"]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("cannot read instance"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn malformed_module_names_the_json_path() {
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "bad.json",
        r#"{"name": "x", "kind": "crossed", "g": {"bracket": 3}}"#,
    );
    let o = hgt(&["validate-module", &p]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.json"), "{}", stderr(&o));
}

#[test]
fn unknown_config_field_is_rejected_with_its_path() {
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "run.json",
        r#"{"tolerances": {"fix": {"cg_tol": 1e-10, "typo": 1}}}"#,
    );
    let o = hgt(&["--config", &p, "validate-module", "product"]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("tolerances.fix") && e.contains("typo"), "{e}");
}

#[test]
fn identities_pass_on_small_suite() {
    let o = hgt(&[
        "check-identities",
        "--module",
        "mixed",
        "--dim",
        "3",
        "--seeds",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json_stdout(&o);
    assert!(r["result"]["worst"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn environment_overrides_are_applied_and_echoed() {
    let o = hgt_env(
        &["validate-module", "product"],
        Some(r#"{"module": 1e-12}"#),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json_stdout(&o);
    assert_eq!(r["config"]["tolerances"]["module"], 1e-12);
    assert_eq!(r["environment"]["HGT_TOLERANCES"], r#"{"module": 1e-12}"#);
    let o = hgt_env(&["validate-module", "product"], Some(r#"{"module": -1}"#));
    assert_eq!(code(&o), 2);
}

#[test]
fn failed_bound_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "run.json", r#"{"tolerances": {"poincare2": 1e-14}}"#);
    let report = dir.path().join("r.json");
    let o = hgt(&[
        "--config",
        &cfg,
        "poincare2",
        "--grid",
        "4",
        "--seed",
        "1",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let r = json_file(&report);
    assert_eq!(r["passed"], false);
    assert_eq!(r["config_file"]["tolerances"]["poincare2"], 1e-14);
}

#[test]
fn flat_instance_fixes_to_zero() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "spec.json",
        r#"{"module": "identity-su2", "m": 3, "n": 6, "seed": 3}"#,
    );
    let inst = dir.path().join("inst");
    let o = hgt(&[
        "gen",
        "--kind",
        "scramble2",
        "--spec",
        &spec,
        "--out",
        inst.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(inst.join("A.bin").exists() && inst.join("B.bin").exists());
    let report = dir.path().join("fix.json");
    let o = hgt(&[
        "fix-gauge2",
        "--module",
        "identity-su2",
        "--conn",
        inst.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json_file(&report);
    assert_eq!(r["passed"], true);
    assert!(
        r["result"]["pipeline"]["final_checks"]["top_norm"]
            .as_f64()
            .unwrap()
            <= 1e-9
    );
}

#[test]
fn scrambled_instance_recovers_planted_field() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "spec.json",
        r#"{"module": "product", "m": 3, "n": 6, "seed": 2}"#,
    );
    let inst = dir.path().join("inst");
    let o = hgt(&[
        "gen",
        "--kind",
        "scramble2",
        "--spec",
        &spec,
        "--out",
        inst.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let canon = dir.path().join("canon");
    let report = dir.path().join("fix.json");
    let o = hgt(&[
        "fix-gauge2",
        "--conn",
        inst.join("instance.json").to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--emit-canonical",
        canon.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json_file(&report);
    assert!(
        r["result"]["ground_truth_pointwise_norm_error"]
            .as_f64()
            .unwrap()
            < 0.1
    );
    // the emitted representative is already canonical
    let o = hgt(&["fix-gauge2", "--conn", canon.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn module_mismatch_is_a_precondition() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "spec.json",
        r#"{"module": "product", "m": 3, "n": 3, "seed": 0}"#,
    );
    let inst = dir.path().join("inst");
    assert_eq!(
        code(&hgt(&[
            "gen",
            "--kind",
            "canonical2",
            "--spec",
            &spec,
            "--out",
            inst.to_str().unwrap()
        ])),
        0
    );
    let o = hgt(&[
        "fix-gauge2",
        "--module",
        "so3-vector",
        "--conn",
        inst.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("generated for module"),
        "{}",
        stderr(&o)
    );
    let o = hgt(&["fix-gauge3", "--conn", inst.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn three_gauge_round_trip_through_files() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "spec.json",
        r#"{"module": "rep-2crossed", "m": 4, "n": 3, "seed": 1}"#,
    );
    let inst = dir.path().join("inst");
    let o = hgt(&[
        "gen",
        "--kind",
        "scramble3",
        "--spec",
        &spec,
        "--out",
        inst.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = hgt(&["fix-gauge3", "--conn", inst.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json_stdout(&o);
    assert!(r["result"]["ground_truth_pointwise_norm_error"]
        .as_f64()
        .is_some());
}

#[test]
fn poincare3_passes_on_a_small_grid() {
    let o = hgt(&["poincare3", "--seed", "0", "--grid", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(json_stdout(&o)["result"]["ratio"].as_f64().unwrap() <= 0.05);
}

#[test]
fn selfdual_field_and_size_check() {
    let dir = TempDir::new().unwrap();
    let field = dir.path().join("w.bin");
    let o = hgt(&[
        "selfdual",
        "--dim",
        "4",
        "--grid",
        "3",
        "--sign",
        "-1",
        "--emit",
        field.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(&std::fs::read(&field).unwrap()[..4], b"HGTC");
    let o = hgt(&["selfdual", "--dim", "6", "--grid", "9"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("size"), "{}", stderr(&o));
    let inst = dir.path().join("sd");
    let spec = write(
        &dir,
        "spec.json",
        r#"{"module": "scalar", "m": 4, "n": 3, "seed": 5}"#,
    );
    let o = hgt(&[
        "gen",
        "--kind",
        "selfdual",
        "--spec",
        &spec,
        "--out",
        inst.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(inst.join("omega.bin").exists());
}

#[test]
fn survey_reports_finite_ratios() {
    let o = hgt(&["survey", "--seeds", "1", "--sizes", "3,4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json_stdout(&o);
    assert_eq!(r["result"]["finite"], true);
    assert_eq!(r["result"]["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = hgt(&[
            "poincare2",
            "--grid",
            "4",
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        runs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
}
