use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_refprime"))
}

#[test]
fn validate_selector_runs_only_that_suite() {
    let out = bin().args(["validate", "gradient"]).env("RUST_LOG", "off").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let headers: Vec<&str> = stdout.lines().filter(|l| !l.starts_with(' ')).collect();
    assert_eq!(headers, ["PASS gradient"]);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "no_such_setting = 1\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&bad).env("RUST_LOG", "off").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["run", "--experiment", "E9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mock_run_then_resume_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = |extra: &[&str]| {
        bin()
            .args(["run", "--mock", "--seed", "4", "--experiment", "E2a", "--out"])
            .arg(dir.path())
            .args(extra)
            .env("RUST_LOG", "off")
            .output()
            .unwrap()
    };
    let first = run(&[]);
    assert_eq!(first.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&first.stdout).starts_with("24 sessions run, 0 skipped, 0 failed"));
    assert_eq!(run(&[]).status.code(), Some(2));
    let resumed = run(&["--resume"]);
    assert!(String::from_utf8_lossy(&resumed.stdout).starts_with("0 sessions run, 24 skipped"));
    let report = bin()
        .args(["report", "--experiment", "E2a", "--out"])
        .arg(dir.path())
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    assert_eq!(report.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&report.stdout).contains("# E2a analysis"));
}
