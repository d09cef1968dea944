use std::fs;
use std::process::{Command, Output};

const BM: &str = r#"{"kind": "fbm", "hurst": 0.5}"#;
const PS: &str = r#"{"kind": "power_sum", "lambda0": 0.4, "alpha_inf": 0.7}"#;

fn gfq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfq")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn delta_closed_form() {
    let o = gfq(&["delta", "--model", BM, "--c", "4"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["delta"].as_f64().unwrap() - 1.0 / 16.0).abs() < 1e-12);
}

#[test]
fn model_file_and_info() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("ps.json");
    fs::write(&model, PS).unwrap();
    let o = gfq(&["model-info", "--model", model.to_str().unwrap(), "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
    assert!((v["rv_zero"].as_f64().unwrap() - 0.4).abs() < 0.02);

    let text = stdout(&gfq(&["model-info", "--model", model.to_str().unwrap()]));
    assert!(text.contains("verdict: PASS"));
}

#[test]
fn delta_audit_exit_code() {
    let o = gfq(&["delta-audit", "--model", PS, "--regime", "light", "--c-grid", "1e2:1e5:12"]);
    assert!(o.status.success());
    // Wrong regime direction: the slope is not the light-traffic index.
    let o = gfq(&["delta-audit", "--model", PS, "--regime", "light", "--c-grid", "1e-5:1e-2:12"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_path_is_seeded() {
    let args = ["simulate-path", "--model", PS, "--h", "0.1", "--n-left", "3", "--n-right", "5", "--seed", "7"];
    let a = stdout(&gfq(&args));
    assert_eq!(a, stdout(&gfq(&args)));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "t,x");
    assert_eq!(lines.len(), 1 + 9);
    assert!(lines[4].ends_with(",0.0") || lines[4].ends_with(",0"), "{}", lines[4]);
}

#[test]
fn simulate_queue_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q");
    let o = gfq(&[
        "simulate-queue", "--model", BM, "--c", "1", "--S", "8", "--T", "2", "--h", "0.125", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("queue.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 17);
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("queue.json")).unwrap()).unwrap();
    assert!(side["q0"].as_f64().unwrap() >= 0.0);
}

#[test]
fn entropy_profile_json() {
    let o = gfq(&["entropy", "--model", BM, "--L", "1", "--zeta", "0.2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["dudley_value"].as_f64().unwrap() > 0.0);
    assert!(v["modulus_bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn flt_workload_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"model": {"kind": "fbm", "hurst": 0.7}, "regime": "light", "c_values": [1, 4], "replications": 300}"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let args = ["flt-workload", "--config", cfg.to_str().unwrap(), "--seed", "11", "--out", out.to_str().unwrap()];
    let o = gfq(&args);
    assert!(matches!(o.status.code(), Some(0) | Some(1)), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("flt-workload.csv")).unwrap();
    assert!(csv.starts_with("c,delta,t,ks,threshold,pass"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("flt-workload.json")).unwrap()).unwrap();
    assert_eq!(o.status.code() == Some(0), report["verdict"].as_bool().unwrap());
    let first = fs::read_to_string(out.join("flt-workload.json")).unwrap();
    gfq(&args);
    assert_eq!(first, fs::read_to_string(out.join("flt-workload.json")).unwrap());
}

#[test]
fn diagnostics_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let omega = dir.path().join("omega.json");
    fs::write(
        &omega,
        r#"{"model": {"kind": "fbm", "hurst": 0.5}, "regime": "heavy", "c": 1, "gamma": 0.8, "t_grid": [1, 8], "t_max": 16, "replications": 200}"#,
    )
    .unwrap();
    let o = gfq(&["omega-decay", "--config", omega.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["p_t"].as_array().unwrap().len(), 2);

    let modulus = dir.path().join("modulus.json");
    fs::write(
        &modulus,
        r#"{"model": {"kind": "fbm", "hurst": 0.5}, "c": 1, "zeta_grid": [0.1, 0.01], "eta": 1, "replications": 100}"#,
    )
    .unwrap();
    let o = gfq(&["modulus", "--config", modulus.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn errors_exit_with_two() {
    assert_eq!(gfq(&["delta", "--model", r#"{"kind": "fbm", "hurst": 1.5}"#, "--c", "1"]).status.code(), Some(2));
    assert_eq!(gfq(&["flt-input"]).status.code(), Some(2));
    assert_eq!(gfq(&["delta", "--model", "/nonexistent.json", "--c", "1"]).status.code(), Some(2));
}
