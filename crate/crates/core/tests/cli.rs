use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn intops(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intops"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const YANG: &str = r#"{"family":"xxx","N":2,"M":2,"nu":[1.0,0.0],"spin_mode":"general","seed":3}"#;

#[test]
fn certify_rmatrix_yang_passes() {
    let out = intops(&["certify-rmatrix", "--family", "xxx", "--n", "2", "--samples", "50", "--seed", "7", "--tol", "1e-10"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    for key in ["tool_version", "command", "config_echo", "seed"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["command"], "certify-rmatrix");
    assert_eq!(v["seed"], 7);
}

#[test]
fn failed_check_exits_one() {
    // A tolerance no floating-point residual can meet.
    let out = intops(&["certify-functions", "--flavor", "rational", "--samples", "5", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json_of(&out)["max_residual"].as_f64().unwrap() > 0.0);
}

#[test]
fn unequal_per_site_nu_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"family":"xxx","N":2,"M":2,"nu":[[1.0,0.0],[2.0,0.0]],"spin_mode":"general","seed":3}"#,
    );
    let out = intops(&["check-lax", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("nu") && msg.contains("constraint"), "{msg}");
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    for (body, field) in [
        (r#"{"family":"xxx","N":2,"M":2,"nu":[1,0],"spin_mode":"weird","seed":3}"#, "spin_mode"),
        (r#"{"family":"bb","N":2,"M":2,"nu":[1,0],"spin_mode":"general","seed":3}"#, "tau"),
        (r#"{"family":"xxx","N":2,"M":2,"nu":[1,0],"spin_mode":"general"}"#, "seed"),
        ("not json", "config"),
    ] {
        let cfg = write_config(dir.path(), "c.json", body);
        let out = intops(&["check-exchange", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(2), "{body}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(field), "{body}");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(intops(&["certify-rmatrix"]).status.code(), Some(2));
    assert_eq!(intops(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(intops(&["certify-rmatrix", "--family", "zz"]).status.code(), Some(2));
    assert_eq!(intops(&["check-cm-rmx", "--family", "xxx", "--n", "2", "--m", "2", "--nu", "1"]).status.code(), Some(2));
    assert_eq!(intops(&["--help"]).status.code(), Some(0));
}

#[test]
fn model_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.json", YANG);
    for args in [
        vec!["check-lax", "--config", &cfg, "--z-samples", "5", "--tol", "1e-9"],
        vec!["check-exchange", "--config", &cfg, "--pairs", "5", "--tol", "1e-9"],
        vec!["check-cm-rmx", "--family", "11v", "--m", "3", "--nu", "1,0", "--seed", "2", "--tol", "1e-9"],
    ] {
        let out = intops(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let v = json_of(&out);
        assert!(v["max_residual"].as_f64().unwrap() < 1e-9);
        assert_eq!(v["samples"].as_array().unwrap().len(), 5);
    }
}

#[test]
fn simulate_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.json", YANG);
    let csv = dir.path().join("traj.csv");
    let out = intops(&[
        "simulate", "--config", &cfg, "--dt", "1e-3", "--steps", "100", "--monitor-z", "0.3,0.2;-0.4,0.1",
        "--monitor-every", "10", "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["rows"], 11);
    assert_eq!(v["drift"].as_array().unwrap().len(), 1 + 2 * 3 + 3);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.starts_with("t,re_q0,im_q0"));
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.json", YANG);
    let csv = dir.path().join("t.csv");
    let csv = csv.to_str().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["certify-functions", "--flavor", "trig", "--samples", "20", "--seed", "4"],
        vec!["certify-rmatrix", "--family", "7v", "--c", "0.7,0.2", "--samples", "5", "--seed", "4"],
        vec!["check-lax", "--config", &cfg],
        vec!["check-exchange", "--config", &cfg, "--pairs", "2"],
        vec!["check-cm-rmx", "--family", "xxx", "--n", "2", "--m", "2", "--nu", "1,0", "--seed", "9"],
        vec!["simulate", "--config", &cfg, "--steps", "50", "--out", csv],
    ];
    for args in runs {
        let a = intops(&args);
        let csv_a = std::fs::read(csv).ok();
        let b = intops(&args);
        let csv_b = std::fs::read(csv).ok();
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(csv_a, csv_b);
    }
}
