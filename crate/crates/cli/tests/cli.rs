use std::path::Path;
use std::process::{Command, Output};

fn errdom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_errdom")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_biorth_succeeds() {
    let out = errdom(&["validate-biorth", "--rounds", "2"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 4);
}

#[test]
fn solve_writes_nodal_values() {
    let out = errdom(&["solve", "--preset", "discrete_laplacian"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("vertex,x,y,u\n"));
    // The initial mesh has 25 vertices.
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn estimate_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out =
        errdom(&["--output", d, "estimate", "--family", "hier", "--preset", "face_dirac", "--reference-level", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("estimate.json")).unwrap()).unwrap();
    assert_eq!(json["family"], "hierarchical");
    assert_eq!(json["all_hold"], true);
    let csv = std::fs::read_to_string(dir.path().join("estimate.csv")).unwrap();
    assert!(csv.starts_with("family,index_kind,index,value\n"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "preset = discrete_laplacian\nrounds = 2\ntheta = 0.3\noracle_depth = 0\n").unwrap();
    let out_dir = dir.path().join("out");
    let args = ["--config", cfg.to_str().unwrap(), "--output", out_dir.to_str().unwrap(), "adapt", "--rounds", "3"];
    let out = errdom(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(out_dir.join("adapt.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("adapt.json")).unwrap()).unwrap();
    assert_eq!(json["theta"], 0.3);
    assert!(Path::new(&out_dir.join("adapt.gp")).exists());
}

#[test]
fn rejects_unknown_families_and_keys() {
    assert!(!errdom(&["estimate", "--family", "magic"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "colour = red\n").unwrap();
    let out = errdom(&["--config", cfg.to_str().unwrap(), "solve"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_inequalities_give_a_nonzero_exit_code() {
    // Two steps cannot show a tenfold growth of the classical ratio.
    let out = errdom(&["demo-overestimation", "--steps", "2", "--reference-level", "3", "--oracle-depth", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
    assert_eq!(stdout(&out).lines().count(), 3);
}
