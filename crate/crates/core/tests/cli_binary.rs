use std::path::PathBuf;
use std::process::Command;

use ssm_entropy::cli::{Report, SsmReport};

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ssm-entropy")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn entropy_report_round_trips() {
    let path = model("uniform_binary.toml");
    let (code, out, _) = run(&["entropy", path.to_str().unwrap(), "--n", "2"]);
    assert_eq!(code, 0);
    let r = Report::from_json(&out).unwrap();
    assert!(r.converged);
    assert!((r.lower.0 - 2f64.ln()).abs() < 1e-9);
    assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
    assert_eq!(r.to_json().trim(), out.trim());
}

#[test]
fn bits_and_text_output() {
    let path = model("uniform_binary.toml");
    let (code, out, _) = run(&["entropy", path.to_str().unwrap(), "--n", "1", "--units", "bits", "--format", "text"]);
    assert_eq!(code, 0);
    assert!(out.contains("units: bits"), "{out}");
    assert!(out.lines().any(|l| l.starts_with("lower: 0.99999") || l == "lower: 1"), "{out}");
}

#[test]
fn hard_square_pressure_equals_entropy() {
    let path = model("hard_squares.toml");
    let p = path.to_str().unwrap();
    let (_, e, _) = run(&["entropy", p, "--n", "2", "--m", "4"]);
    let (_, q, _) = run(&["pressure", p, "--n", "2", "--m", "4"]);
    let (e, q) = (Report::from_json(&e).unwrap(), Report::from_json(&q).unwrap());
    assert_eq!((e.lower, e.upper), (q.lower, q.upper));
    assert_eq!(q.quantity, "pressure");
}

#[test]
fn ssm_check_reports() {
    let (code, out, _) = run(&["ssm-check", model("hard_squares.toml").to_str().unwrap()]);
    assert_eq!(code, 0);
    let r: SsmReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.q_value.0, 0.5);
    assert!(r.certified);
    let (_, out, _) = run(&["ssm-check", model("agreement.toml").to_str().unwrap(), "--pc", "0.556"]);
    let r: SsmReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.q_value.0, 1.0);
    assert!(!r.certified);
}

#[test]
fn marginal_command() {
    let p = model("hard_squares.toml");
    let (code, out, _) = run(&["marginal", p.to_str().unwrap(), "--n", "1", "--m", "1", "--site", "0,0=1", "--site", "-1,0=1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["lower"], 0.0);
    assert_eq!(v["upper"], 0.0);
}

#[test]
fn unconverged_run_exits_with_two() {
    let p = model("critical_ising.toml");
    let (code, out, _) = run(&["entropy", p.to_str().unwrap(), "--n", "1", "--tol", "1e-6", "--max-j", "2"]);
    assert_eq!(code, 2);
    let r = Report::from_json(&out).unwrap();
    assert!(!r.converged);
    assert_eq!(r.j, 2);
}

#[test]
fn usage_and_parse_errors_exit_with_one() {
    assert_eq!(run(&["entropy"]).0, 1);
    assert_eq!(run(&["entropy", "/nonexistent.toml", "--n", "2"]).0, 1);
    let dir = std::env::temp_dir().join(format!("ssm-entropy-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(
        &bad,
        "dimension = 2\nalphabet = [\"0\", \"1\"]\ngamma = { \"0\" = 1, \"1\" = 1 }\nbeta = [[[1, 1], [1, 0]], [[1, 1]]]\n",
    )
    .unwrap();
    let (code, _, err) = run(&["entropy", bad.to_str().unwrap(), "--n", "2"]);
    assert_eq!(code, 1);
    assert!(err.contains("axis 1"), "{err}");
    let cube = dir.join("cube.toml");
    std::fs::write(
        &cube,
        "dimension = 3\nalphabet = [\"0\", \"1\"]\ngamma = { \"0\" = 1, \"1\" = 1 }\nbeta = [[[1, 1], [1, 1]], [[1, 1], [1, 1]], [[1, 1], [1, 1]]]\n",
    )
    .unwrap();
    let (code, _, err) = run(&["entropy", cube.to_str().unwrap(), "--n", "2"]);
    assert_eq!(code, 1);
    assert!(err.contains("dimension 3"), "{err}");
    assert_eq!(run(&["--help"]).0, 0);
}
