use std::path::PathBuf;
use std::process::{Command, Output};

fn gradterm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradterm")).args(args).output().unwrap()
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gradterm-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn constants_ledger() {
    let out = gradterm(&["constants"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let s = &r["data"]["schedule"];
    assert!((s["eta"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(s["nu_hat"], 4);
    assert!((r["data"]["c_r"].as_f64().unwrap() - 4.567_103_692_442_759).abs() < 1e-12);
    assert_eq!(r["summary"]["failed"], 0);
}

#[test]
fn same_seed_same_body() {
    let dir = scratch_dir("determinism");
    let cfg = dir.join("small.toml");
    std::fs::write(&cfg, "[potential]\ncases = 6\n").unwrap();
    let run = || {
        let out = gradterm(&["potential-check", "--seed", "11", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        let mut r = json(&out);
        r["wall_time_s"] = 0.0.into();
        r.to_string()
    };
    assert_eq!(run(), run());
    let other = gradterm(&["potential-check", "--seed", "12", "--config", cfg.to_str().unwrap()]);
    let mut r = json(&other);
    r["wall_time_s"] = 0.0.into();
    assert_ne!(run(), r.to_string());
}

#[test]
fn failing_check_exits_one_and_writes_tables() {
    let dir = scratch_dir("failing");
    let cfg = dir.join("strict.toml");
    std::fs::write(&cfg, "[cauchy]\nfunctions = [\"bump2\"]\nspacing = 0.05\nmax_error = 1e-12\n").unwrap();
    let report = dir.join("report.json");
    let out = gradterm(&["cauchy-check", "--config", cfg.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r["summary"]["failed"].as_u64().unwrap() >= 1);
    let csv = std::fs::read_to_string(dir.join("report-refinement.csv")).unwrap();
    assert!(csv.starts_with("function,spacing,max_relative_error"));
}

#[test]
fn malformed_config_names_the_field() {
    let dir = scratch_dir("malformed");
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, "[moser]\nspacing = \"fine\"\n").unwrap();
    let out = gradterm(&["moser-run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("moser.spacing"), "{err}");

    std::fs::write(&cfg, "[dbar]\nspacingg = 0.1\n").unwrap();
    let out = gradterm(&["dbar-solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spacingg"));
}

#[test]
fn unknown_subcommand_exits_two() {
    let out = gradterm(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn resolution_study_table() {
    let dir = scratch_dir("resolution");
    let report = dir.join("b.json");
    let out = gradterm(&["bochner-check", "--resolution-study", "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("b-resolution-study.csv")).unwrap();
    assert!(csv.lines().count() > 1);
}
