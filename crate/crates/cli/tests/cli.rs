use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_stackel-lab");

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("STACKEL_LAB_OUT")
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path, command: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("{command}.summary.json"))).expect("summary written");
    serde_json::from_str(&text).expect("summary is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn closure_for_three_halves() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["closure", "--k", "3/2", "--Q", "1", "--alpha", "0.2", "--beta", "0.3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "closure");
    assert_eq!(s["results"]["closed"], Value::Bool(true));
    let n = s["results"]["n_radial"].as_u64().unwrap();
    assert!((1..=6).contains(&n));
    assert!(dir.path().join("closure.csv").exists());
}

#[test]
fn degeneracy_for_integer_index() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["degeneracy", "--k", "2", "--N-max", "50"]);
    assert_eq!(code(&out), 0);
    let s = summary(dir.path(), "degeneracy");
    assert_eq!(s["results"]["mismatched_levels"].as_array().unwrap().len(), 0);
}

#[test]
fn spectrum_ground_energy() {
    let dir = TempDir::new().unwrap();
    let args = ["spectrum", "--k", "1", "--a", "1", "--b", "1", "--Q", "1", "--n-max", "2", "--m-max", "2"];
    let out = run_in(dir.path(), &args);
    assert_eq!(code(&out), 0);
    let e0 = summary(dir.path(), "spectrum")["results"]["ground_energy"].as_f64().unwrap();
    assert!((e0 + 1.0 / 9.0).abs() < 1e-15);
}

#[test]
fn summaries_are_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["bracket", "--k", "3/2", "--samples", "20", "--seed", "7"];
    assert_eq!(code(&run_in(a.path(), &args)), 0);
    assert_eq!(code(&run_in(b.path(), &args)), 0);
    let read = |d: &TempDir| std::fs::read(d.path().join("bracket.summary.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn summary_records_version_config_and_tolerance() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run_in(dir.path(), &["trajectory", "--periods", "1"])), 0);
    let s = summary(dir.path(), "trajectory");
    assert_eq!(s["tool"], "stackel-lab");
    assert!(s["version"].as_str().is_some_and(|v| !v.is_empty()));
    assert_eq!(s["config"]["periods"], "1");
    assert_eq!(s["config"]["int_tol"].as_str().unwrap().parse::<f64>().unwrap(), 1e-12);
    assert!(s["tolerance"]["criterion"].as_f64().is_some());
    assert!(s["tolerance"]["integration"].as_f64().is_some());
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run_in(dir.path(), &["closure", "--k", "4/2"])), 2);
    assert_eq!(code(&run_in(dir.path(), &["spectrum", "--a", "1", "--alpha", "0.5"])), 2);

    let config = dir.path().join("bad.conf");
    std::fs::write(&config, "k = 1\nbogus = 3\n").unwrap();
    assert_eq!(code(&run_in(dir.path(), &["spectrum", "--config", config.to_str().unwrap()])), 2);
}

#[test]
fn unbounded_state_is_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["trajectory", "--state", "1,1,2,1"]);
    assert_eq!(code(&out), 3);
    let s = summary(dir.path(), "trajectory");
    assert_eq!(s["status"], "error");
    assert!(s["error"].as_str().is_some_and(|e| !e.is_empty()));
}

#[test]
fn growing_gauge_fails_its_criterion() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["wavefunction-residual", "--gauge", "growing"]);
    assert_eq!(code(&out), 1);
    assert_eq!(summary(dir.path(), "wavefunction-residual")["status"], "fail");
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "k = 3\nQ = 2\nn_max = 1\n").unwrap();
    let out = run_in(dir.path(), &["spectrum", "--config", config.to_str().unwrap(), "--Q", "1"]);
    assert_eq!(code(&out), 0);
    let s = summary(dir.path(), "spectrum");
    assert_eq!(s["config"]["k"], "3/1");
    assert_eq!(s["config"]["Q"], "1");
    assert_eq!(s["config"]["n_max"], "1");
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(BIN)
        .args(["degeneracy", "--k", "1", "--N-max", "5"])
        .env("STACKEL_LAB_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("degeneracy.summary.json").exists());
    assert!(dir.path().join("degeneracy.csv").exists());
}
