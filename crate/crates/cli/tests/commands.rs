use std::path::PathBuf;
use std::process::{Command, Output};

const SMALL: &str = r#"
[layout]
tiers = 1

[loads]
cells = [3, 3, 3, 3, 3, 3, 3]
sleeping = [0, 1]

[scheme]
outage_thresholds = [1.0]
reference = 2

[numerics]
rings = 8
sectors = 8

[simulation]
iterations = 2000
seed = 5
"#;

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sleepcell-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn sleepcell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sleepcell"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(sleepcell(&["access"]).status.code(), Some(1));
    assert_eq!(sleepcell(&["bogus"]).status.code(), Some(1));
    let path = scratch("ok.toml", SMALL);
    let out = sleepcell(&[
        "access",
        "--scenario",
        path.to_str().unwrap(),
        "--sweep",
        "zeta=1:1:2",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    assert_eq!(sleepcell(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_scenarios_exit_two() {
    let missing = sleepcell(&["access", "--scenario", "/nonexistent/scenario.toml"]);
    assert_eq!(missing.status.code(), Some(2));
    let path = scratch("bad.toml", "[fading]\npath_loss = 1.9\n");
    let out = sleepcell(&["access", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let message = String::from_utf8_lossy(&out.stderr);
    assert!(message.contains("path_loss"), "{message}");
}

#[test]
fn access_sweep_writes_tagged_csv() {
    let path = scratch("sweep.toml", SMALL);
    let out = sleepcell(&[
        "access",
        "--scenario",
        path.to_str().unwrap(),
        "--sweep",
        "U2=2:2:4",
        "--mode",
        "analytic",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# sleepcell"));
    assert!(text.contains("# command access"));
    assert!(text.contains("# seed 5"));
    assert!(text.contains("# sweep U2=2:2:4"));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "axis,point,scheme,quantity,source,estimate,std_error"
    );
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("U2,")).collect();
    assert!(rows.iter().any(|r| r.starts_with("U2,2,")));
    assert!(rows.iter().any(|r| r.starts_with("U2,4,")));
    assert!(rows.iter().all(|r| r.contains(",analytic,")));
}
