use std::path::Path;
use std::process::{Command, Output};

fn loghardy(args: &[&str], config: &str, dir: &Path) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_loghardy"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

const SMALL_DISK: &str = r#"{
    "domain": { "kind": "disk", "radius": 1.0 },
    "mesh": { "target_h": 0.15, "grading_q": 0.5, "rings": 8 },
    "eigen": { "a_values": [1.2], "oracle_grid": 1000 }
}"#;

#[test]
fn eigen_writes_the_contract_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = loghardy(&["eigen"], SMALL_DISK, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["lambda.json", "eigvec.csv", "oracle_compare.json"] {
        assert!(dir.path().join("out").join(name).is_file(), "missing {name}");
    }
    let doc = json(&dir.path().join("out/lambda.json"));
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["command"], "eigen");
    assert_eq!(doc["config"]["mesh"]["rings"], 8);
    let lambda = doc["results"][0]["lambda"].as_f64().unwrap();
    assert!(lambda > 0.0 && lambda < 1.0);
    let csv = std::fs::read_to_string(dir.path().join("out/eigvec.csv")).unwrap();
    assert!(csv.starts_with("a,x,y,u\n"));
}

#[test]
fn overrides_take_precedence_over_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = loghardy(&["eigen", "--set", "mesh.rings=6", "--set", "eigen.a_values.0=1.3"], SMALL_DISK, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&dir.path().join("out/lambda.json"));
    assert_eq!(doc["config"]["mesh"]["rings"], 6);
    assert_eq!(doc["results"][0]["a"], 1.3);
}

#[test]
fn admissible_grid_has_an_admissible_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{ "mesh": { "target_h": 0.1, "rings": 8 }, "admissible": { "realizations": 1 } }"#;
    let out = loghardy(&["admissible"], config, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/admissible.csv")).unwrap();
    assert!(csv.lines().skip(1).any(|l| l.ends_with(",true")));
}

#[test]
fn schema_errors_exit_with_3_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = loghardy(&["eigen"], r#"{ "mesh": { "ringz": 3 } }"#, dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ringz"));

    let out = loghardy(&["eigen"], r#"{ "eigen": { "a_values": [0.5] } }"#, dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eigen.a_values[0]"));
}

#[test]
fn unknown_command_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = loghardy(&["frobnicate"], "{}", dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn command_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = loghardy(&["robin"], r#"{ "command": "eigen" }"#, dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn non_convergence_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = loghardy(&["eigen", "--set", "solver.max_iter=1"], SMALL_DISK, dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/lambda.json").is_file());
}
