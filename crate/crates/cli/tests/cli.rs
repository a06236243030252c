use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use endowlab::fixtures;
use endowlab::instance::{InstanceFile, InstanceKind};
use endowlab::topology::SelectionMode;
use serde_json::Value;
use tempfile::TempDir;

fn endowlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_endowlab"))
        .args(args)
        .env_remove("ENDOWLAB_BOUNDS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("invalid JSON ({e}): {}", stdout(out)))
}

fn write_scenario(dir: &Path, file: &str, payload: &endowlab::ScenarioPayload) -> PathBuf {
    let path = dir.join(file);
    let body = serde_json::to_string_pretty(&InstanceFile::new(InstanceKind::Scenario, payload).unwrap()).unwrap();
    std::fs::write(&path, body).unwrap();
    path
}

fn split_scenario(dir: &Path) -> String {
    write_scenario(dir, "split.json", &fixtures::cohen_split_scenario(SelectionMode::Rothberger))
        .to_string_lossy()
        .into_owned()
}

#[test]
fn endow_verify_cohen_exhaustive_is_clean() {
    for n in ["0", "1", "2"] {
        let out = endowlab(&["endow-verify", "cohen:D=2", "--n", n, "--exhaustive"]);
        assert_eq!(code(&out), 0, "{}", stdout(&out));
    }
}

#[test]
fn endow_verify_measure_and_seeded() {
    assert_eq!(code(&endowlab(&["endow-verify", "measure:k=2", "--n", "2", "--exhaustive"])), 0);
    assert_eq!(code(&endowlab(&["endow-verify", "cohen:D=3", "--n", "2", "--seeded", "50", "--seed", "3"])), 0);
}

#[test]
fn adversarial_family_exits_with_verification_failure() {
    let out = endowlab(&["--json", "endow-verify", "cohen:D=2", "--n", "1", "--exhaustive", "--family", "adversarial"]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("0:1"), "{}", stdout(&out));
    let out = endowlab(&["endow-verify", "cohen:D=2", "--n", "2", "--exhaustive", "--family", "adversarial", "--clause3"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn malformed_poset_spec_is_usage_error() {
    assert_eq!(code(&endowlab(&["endow-verify", "cohen:D=", "--n", "1", "--exhaustive"])), 64);
    assert_eq!(code(&endowlab(&["no-such-command"])), 64);
    assert_eq!(code(&endowlab(&["dow", "cohen:D=2"])), 64);
}

#[test]
fn dow_trace_on_split_antichain() {
    let out = endowlab(&["--json", "dow", "cohen:D=2", "--n", "1", "0:0", "0:1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"].as_array().map(Vec::len), Some(2), "{v}");
    // not maximal
    assert_eq!(code(&endowlab(&["dow", "cohen:D=2", "--n", "1", "0:0"])), 65);
}

#[test]
fn approx_and_refine_on_split_scenario() {
    let dir = TempDir::new().unwrap();
    let path = split_scenario(dir.path());
    let out = endowlab(&["--json", "approx", "--scenario", &path, "--level", "1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["cover"], serde_json::json!([["x"], ["x", "y"]]));
    assert_eq!(v["certificate"]["positive"], Value::Bool(true));

    let out = endowlab(&["--json", "refine", "--scenario", &path, "--level", "1", "--family", r#"[["x"]]"#]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_eq!(json(&out)["certificate"]["positive"], Value::Bool(true));

    let out = endowlab(&["refine", "--scenario", &path, "--level", "1", "--family", "not json"]);
    assert_eq!(code(&out), 64);
}

#[test]
fn preserve_then_verify_round_trip() {
    let dir = TempDir::new().unwrap();
    let path = split_scenario(dir.path());
    let cert = dir.path().join("cert.json").to_string_lossy().into_owned();
    let out = endowlab(&["preserve", "--scenario", &path, "--cert", &cert]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let first = std::fs::read(&cert).unwrap();
    assert_eq!(code(&endowlab(&["verify", "--cert", &cert])), 0);

    let again = endowlab(&["preserve", "--scenario", &path, "--cert", &cert]);
    assert_eq!(code(&again), 0);
    assert_eq!(first, std::fs::read(&cert).unwrap(), "certificates are byte-identical");

    let mut forged: Value = serde_json::from_slice(&first).unwrap();
    forged["verdict"] = Value::String("failed".into());
    std::fs::write(&cert, serde_json::to_string(&forged).unwrap()).unwrap();
    assert_eq!(code(&endowlab(&["verify", "--cert", &cert])), 3);
}

#[test]
fn no_headroom_is_scenario_error() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(dir.path(), "tight.json", &fixtures::no_headroom_scenario());
    let out = endowlab(&["--json", "preserve", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["exit_code"], 2);
}

#[test]
fn bad_input_files_are_data_errors() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"format_version":1,"kind":"scenario","payload":{},"extra":1}"#).unwrap();
    assert_eq!(code(&endowlab(&["preserve", "--scenario", path.to_str().unwrap()])), 65);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&endowlab(&["verify", "--cert", missing.to_str().unwrap()])), 65);
}

#[test]
fn gen_is_deterministic_and_preservable() {
    let dir = TempDir::new().unwrap();
    let a = endowlab(&["gen", "--seed", "5", "--property", "menger"]);
    let b = endowlab(&["gen", "--seed", "5", "--property", "menger"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let path = dir.path().join("g.json");
    std::fs::write(&path, &a.stdout).unwrap();
    let cert = dir.path().join("c.json");
    let out = endowlab(&["preserve", "--scenario", path.to_str().unwrap(), "--cert", cert.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_eq!(code(&endowlab(&["verify", "--cert", cert.to_str().unwrap()])), 0);
}

#[test]
fn every_json_output_parses() {
    let out = endowlab(&["--json", "endow-verify", "measure:k=1", "--n", "1", "--exhaustive"]);
    json(&out);
    let out = endowlab(&["--json", "gen", "--seed", "1"]);
    assert_eq!(json(&out)["kind"], "scenario");
    let out = endowlab(&["--json", "endow-verify", "cohen:D=99", "--n", "1", "--exhaustive"]);
    assert_ne!(code(&out), 0);
    assert!(json(&out)["error"].is_string());
}

#[test]
fn selftest_passes_and_large_bounds_are_refused() {
    let out = endowlab(&["selftest", "--seed", "7", "--count", "20"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_eq!(code(&endowlab(&["selftest", "--bounds", "large"])), 70);
}
