//! End-to-end tests of the command-line binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn hyperrv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperrv")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hyperrv-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn rv_of_the_unit_hemisphere() {
    let out = hyperrv(&["rv", "--sphere", "R=1", "--n", "2", "--m", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let rv = v["result"]["renormalized_volume"].as_f64().unwrap();
    assert!((rv + 2.0 * std::f64::consts::PI).abs() < 1e-6, "{rv}");
    assert!(v["result"]["riesz"]["poles"].is_array());
    assert_eq!(v["config"]["geometry"]["kind"], "sphere");
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["expand", "--ellipse", "a=2,b=1,samples=32", "--order", "5"];
    assert_eq!(hyperrv(&args).stdout, hyperrv(&args).stdout);
    let args = ["solve", "--family", "catenoid", "--inner", "1", "--outer", "1.5"];
    assert_eq!(hyperrv(&args).stdout, hyperrv(&args).stdout);
}

#[test]
fn parity_suite_exits_zero() {
    let out = hyperrv(&["check", "--suite", "parity"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["result"]["passed"], true);
}

#[test]
fn vary_prints_a_comparison_table() {
    let csv = scratch("vary.csv");
    let out = hyperrv(&["vary", "--family", "catenoid", "--param-step", "1e-3", "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = json(&out)["result"]["comparison"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(r["error"].as_f64().unwrap() < 2e-3, "{r}");
    }
    let table = String::from_utf8_lossy(&out.stderr);
    assert!(table.contains("separation") && table.contains("finite diff"));
    assert!(std::fs::read_to_string(csv).unwrap().starts_with("parameter,value,finite_difference"));
}

#[test]
fn solve_writes_profile_csv() {
    let csv = scratch("profile.csv");
    let out = hyperrv(&["solve", "--family", "hemisphere", "--radius", "2", "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("component,x,r"));
    // the hemisphere of radius 2: x² + r² = 4
    for line in lines.take(50) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((f[1] * f[1] + f[2] * f[2] - 4.0).abs() < 1e-8, "{line}");
    }
}

#[test]
fn configuration_errors_exit_three() {
    let cfg = scratch("bad.json");
    std::fs::write(&cfg, "{\n  \"command\": \"rv\",\n  \"order\": \"six\"\n}\n").unwrap();
    let out = hyperrv(&["rv", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3"), "{msg}");

    assert_eq!(hyperrv(&["expand", "--circle", "R=1", "--m", "3"]).status.code(), Some(3));
    assert_eq!(hyperrv(&["solve", "--family", "catenoid", "--inner", "1", "--outer", "4"]).status.code(), Some(3));
    assert_eq!(hyperrv(&["rv", "--circle", "R=1"]).status.code(), Some(3));
}

#[test]
fn config_file_with_flag_override() {
    let cfg = scratch("good.json");
    std::fs::write(&cfg, r#"{"geometry": {"kind": "sphere", "radius": 2.0}, "m": 2, "n": 2, "method": "riesz"}"#).unwrap();
    let out = hyperrv(&["rv", "--config", cfg.to_str().unwrap(), "--method", "hadamard"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["config"]["method"], "hadamard");
    assert!(v["result"]["riesz"].is_null());
    let rv = v["result"]["renormalized_volume"].as_f64().unwrap();
    assert!((rv + 2.0 * std::f64::consts::PI).abs() < 1e-6);
}

#[test]
fn curve_file_and_neumann_file() {
    let p = 32;
    let curve = scratch("curve.csv");
    let nm = scratch("u3.csv");
    let mut c = String::new();
    let mut u = String::new();
    for j in 0..p {
        let t = 2.0 * std::f64::consts::PI * j as f64 / p as f64;
        c.push_str(&format!("{},{}\n", 1.5 * t.cos(), t.sin()));
        u.push_str(&format!("{}\n", 0.1 * (2.0 * t).cos()));
    }
    std::fs::write(&curve, c).unwrap();
    std::fs::write(&nm, u).unwrap();
    let neumann = format!("file:{}", nm.display());
    let out = hyperrv(&["expand", "--curve", curve.to_str().unwrap(), "--neumann", &neumann]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["result"]["m"], 2);
}
