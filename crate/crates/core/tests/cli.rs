use std::path::PathBuf;
use std::process::{Command, Output};

use parageo::CheckReport;

fn parageo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parageo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn swap_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/sasakian-swap.json")
}

fn reports(o: &Output) -> Vec<CheckReport> {
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn list_shows_required_scenarios() {
    let o = parageo(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in [
        "paper-4.1",
        "paper-4.1-as-printed",
        "flat-para-kahler",
        "flat-paracosymplectic",
        "projection-fixture",
        "identity-M1",
        "flat-paracosymplectic-to-parakahler",
    ] {
        assert!(text.contains(name), "missing {name} in\n{text}");
    }
}

#[test]
fn swap_scenario_passes() {
    let o = parageo(&["verify", "--scenario", "paper-4.1", "--samples", "16", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = reports(&o);
    assert!(r.iter().all(|c| c.passed), "{r:#?}");
    assert!(r.windows(2).all(|w| w[0].check <= w[1].check));
}

#[test]
fn config_and_registry_agree() {
    let cfg = swap_config();
    let a = parageo(&["verify", "--config", cfg.to_str().unwrap(), "--samples", "12", "--format", "json"]);
    let b = parageo(&["verify", "--scenario", "sasakian-swap", "--samples", "12", "--format", "json"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn expected_failures_do_not_fail_the_run() {
    let o = parageo(&["verify", "--scenario", "flat-paracosymplectic", "--suite", "paracontact-metric", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let r = reports(&o);
    assert_eq!(r.len(), 1);
    assert!(!r[0].passed && r[0].expected_fail);
}

#[test]
fn empty_suite_gives_empty_report() {
    let o = parageo(&["verify", "--scenario", "identity-M1", "--suite", "", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(reports(&o).is_empty());
}

#[test]
fn unexpected_failure_exits_one_and_is_listed_first() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(swap_config()).unwrap().replace(r#""eta": ["v^2", "0", "1"]"#, r#""eta": ["-v^2", "0", "1"]"#);
    let cfg = dir.path().join("as-printed.json");
    std::fs::write(&cfg, text).unwrap();
    let o = parageo(&["verify", "--config", cfg.to_str().unwrap(), "--suite", "normal,compatible-metric", "--samples", "8"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with("FAIL  M2/"), "{out}");
}

#[test]
fn out_file_receives_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let o = parageo(&[
        "verify", "--scenario", "flat-para-kahler", "--format", "json", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    let r: Vec<CheckReport> = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(r.len(), 5);
}

#[test]
fn usage_and_config_errors_exit_two() {
    assert_eq!(parageo(&["verify"]).status.code(), Some(2));
    assert_eq!(parageo(&["verify", "--scenario", "no-such-thing"]).status.code(), Some(2));
    assert_eq!(parageo(&["verify", "--scenario", "identity-M1", "--suite", "bogus"]).status.code(), Some(2));
    assert_eq!(parageo(&["verify", "--scenario", "identity-M1", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(parageo(&["verify", "--scenario", "identity-M1", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(parageo(&["verify", "--config", "/nonexistent/file.json"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(swap_config())
        .unwrap()
        .replace(r#"[["0", "-1", "0"], ["-1", "0", "0"], ["x^2", "0", "0"]]"#, r#"[["0", "-1"], ["-1", "0"]]"#);
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, text).unwrap();
    let o = parageo(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("structures.M1.phi"), "{}", stderr(&o));
}

#[test]
fn eval_prints_the_jet() {
    let cfg = swap_config();
    let o = parageo(&["eval", "--config", cfg.to_str().unwrap(), "--expr", "(4*x^3+1)/(2*x)", "--at", "x=1,y=2,z=0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("value     2.5"), "{text}");
    assert!(text.contains("gradient  [3.5, 0.0, 0.0]"), "{text}");

    let o = parageo(&["eval", "--config", cfg.to_str().unwrap(), "--expr", "1/x", "--at", "x=0,y=0,z=0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = parageo(&["eval", "--config", cfg.to_str().unwrap(), "--expr", "x+", "--at", "x=1,y=0,z=0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = parageo(&["eval", "--config", cfg.to_str().unwrap(), "--expr", "x", "--at", "p=1"]);
    assert_eq!(o.status.code(), Some(2));
}
