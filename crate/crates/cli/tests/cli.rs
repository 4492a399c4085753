use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
[mesh]
dim = 2
divisions = [2, 2]
lower = [0.0, 0.0]
upper = [1.0, 1.0]

[physics]
variant = "BAROTROPIC_INVISCID"

[eos]
kind = "POLYTROPIC"
k = 1.0
gamma = 1.4

[time]
dt = 0.01
t_end = 0.03
"#;

fn mhd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhd")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", CONFIG);
    let out_dir = dir.path().join("out");
    let out = mhd(&["run", &cfg, "--out", out_dir.to_str().unwrap(), "--snapshot-interval", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(String::from_utf8_lossy(&out.stdout).contains("steps = 3"));
}

#[test]
fn invalid_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &CONFIG.replace("dt = 0.01", "dt = 0.0"));
    let out = mhd(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
    let out = mhd(&["scenario", "rt", "--b0", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // a rest state converges immediately, so use moving 3D data
    let text = format!(
        "{}\n[initial]\nkind = \"INVARIANTS3D\"\n\n[solver]\nmax_iter = 1\nabs_tol = 1e-300\nrel_tol = 1e-300\n",
        CONFIG
            .replace("dim = 2", "dim = 3")
            .replace("divisions = [2, 2]", "divisions = [2, 2, 2]")
            .replace("lower = [0.0, 0.0]", "lower = [-1.0, -1.0, -1.0]")
            .replace("upper = [1.0, 1.0]", "upper = [1.0, 1.0, 1.0]")
    );
    let cfg = write(dir.path(), "fail.toml", &text);
    let out = mhd(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn print_config_emits_loadable_toml() {
    let out = mhd(&["scenario", "rt", "--b0", "0.4", "--factor", "8", "--dt", "0.01", "--print-config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("dt = 0.01"));
    assert!(text.contains("divisions = [4, 16]"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rt.toml", &text);
    let again = mhd(&["run", &cfg, "--print-config"]);
    assert!(again.status.success());
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn check_passes() {
    let out = mhd(&["check", "--trials", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().count() >= 8);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn missing_config_file_fails() {
    let out = mhd(&["run", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(1));
}
