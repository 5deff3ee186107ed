use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_plasmabound"))
}

#[test]
fn solve_prints_header_and_passes() {
    let out = bin().args(["solve", "--shape", "square", "--n", "32", "--lambda", "1", "--p", "2"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"alpha\""));
    assert!(text.contains("energy_cap"));
}

#[test]
fn sweep_exit_code_follows_failures() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    std::fs::write(
        &config,
        r#"{"domains": [{"shape": "disk"}], "p": [2], "lambda": {"min": 0.5, "max": 2, "count": 2}, "checks": ["energy", "levelset"]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let ok = bin()
        .args(["sweep", "--config", config.to_str().unwrap(), "--n", "32", "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out_dir.join("entries.csv").exists());

    // at n = 16 the grid level chain misses the tightest allowed slack
    let strict = bin()
        .args(["sweep", "--config", config.to_str().unwrap(), "--n", "16", "--slack", "1e-6"])
        .output()
        .unwrap();
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("FAIL"));
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"domains": [{"shape": "disk"}], "p": [2], "lambda": []}"#).unwrap();
    let out = bin().args(["sweep", "--config", config.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn radial_profile_csv() {
    let out = bin().args(["profile", "--radial", "--lambda", "1", "--p", "2", "--levels", "5"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,mu,m,e,residual");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("0.00000000000e0,1.00000000000e0,"));
}

#[test]
fn sobolev_and_thresholds() {
    let out = bin().args(["sobolev", "--shape", "square", "--n", "32", "--s", "2"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"Lambda\""));
    let out = bin().args(["thresholds", "--shape", "disk", "--n", "32", "--p", "2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().ends_with("true"));
}
