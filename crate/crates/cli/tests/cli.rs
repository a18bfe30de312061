use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use landau_cli::RunConfig;
use serde_json::{json, Value};
use tempfile::TempDir;

fn landau(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landau")).args(args).output().expect("spawn landau")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn run_config(initial: Value, steps: usize, dt: Value) -> Value {
    json!({
        "initial": initial,
        "grid": {"half_width": 5.0, "nodes_per_axis": 12},
        "solver": {
            "psi": {"kind": "coulomb"},
            "dt": dt,
            "steps": steps,
            "moment_orders": [0.0, 1.0],
            "lp_exponents": [1.0]
        }
    })
}

fn bimodal() -> Value {
    json!({"kind": "bimaxwellian", "separation": 3.0, "temperature": 0.8})
}

fn solve(dir: &Path, name: &str, cfg: &Value) -> (Output, PathBuf) {
    let config = write(dir, &format!("{name}.json"), cfg);
    let out_dir = dir.join(name);
    let out = landau(&["solve", "--config", config.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    (out, out_dir)
}

fn verify(dir: &Path, name: &str, cfg: &Value) -> (Output, PathBuf) {
    let config = write(dir, &format!("{name}.json"), cfg);
    let out_dir = dir.join(name);
    let out = landau(&["verify", "--config", config.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    (out, out_dir)
}

fn radial_verify_config() -> Value {
    json!({
        "suites": ["edd_radial", "gamma_floor"],
        "families": [
            {"name": "maxwellian", "distribution": {"kind": "maxwellian", "temperature": 1.0, "normalize": true}},
            {"name": "shell", "distribution": {"kind": "radial_shell", "radius": 1.5, "width": 0.5, "normalize": true}}
        ],
        "resolutions": [12],
        "half_width": 4.5
    })
}

#[test]
fn functional_writes_a_report() {
    let dir = TempDir::new().unwrap();
    let (out, run_dir) = solve(dir.path(), "seed", &run_config(bimodal(), 1, json!("auto")));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let input = run_dir.join("final_state.json");
    let report = dir.path().join("report.json");
    for psi in ["coulomb", "power_law:-2"] {
        let out = landau(&["functional", "--input", input.to_str().unwrap(), "--psi", psi, "--out", report.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let value = read_json(&report);
        assert!(value.is_object() && !value.as_object().unwrap().is_empty());
    }
    let out = landau(&["functional", "--input", input.to_str().unwrap(), "--psi", "hard", "--out", report.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_radial_suite_passes() {
    let dir = TempDir::new().unwrap();
    let (out, out_dir) = verify(dir.path(), "radial", &radial_verify_config());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let entries = read_json(&out_dir.join("reports.json"));
    assert_eq!(entries.as_array().unwrap().len(), 4);
    let mut rows = csv::Reader::from_path(out_dir.join("summary.csv")).unwrap();
    let headers = rows.headers().unwrap().clone();
    assert_eq!(&headers[0], "suite");
    assert!(rows.records().count() >= 4);
}

#[test]
fn verify_refuses_non_radial_family() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "suites": ["edd_radial"],
        "families": [{"name": "bimodal", "distribution": bimodal()}],
        "resolutions": [8]
    });
    let (out, out_dir) = verify(dir.path(), "bimodal", &cfg);
    assert_eq!(code(&out), 1);
    let entries = read_json(&out_dir.join("reports.json"));
    assert!(entries[0]["error"].is_string());
}

#[test]
fn verify_rejects_bad_configs() {
    let dir = TempDir::new().unwrap();
    let mut cfg = radial_verify_config();
    cfg["suites"] = json!([]);
    assert_eq!(code(&verify(dir.path(), "empty", &cfg).0), 2);
    let mut cfg = radial_verify_config();
    cfg["colour"] = json!("blue");
    assert_eq!(code(&verify(dir.path(), "unknown", &cfg).0), 2);
    let missing = landau(&["verify", "--config", "/nonexistent/cfg.json", "--out-dir", "/tmp/x"]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn verify_reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, dir_a) = verify(dir.path(), "a", &radial_verify_config());
    let (b, dir_b) = verify(dir.path(), "b", &radial_verify_config());
    assert_eq!((code(&a), code(&b)), (0, 0));
    for file in ["reports.json", "summary.csv"] {
        assert_eq!(fs::read(dir_a.join(file)).unwrap(), fs::read(dir_b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn solve_relaxation_writes_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = run_config(bimodal(), 4, json!("auto"));
    let (out, out_dir) = solve(dir.path(), "relax", &cfg);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let mut rows = csv::Reader::from_path(out_dir.join("diagnostics.csv")).unwrap();
    let headers: Vec<String> = rows.headers().unwrap().iter().map(String::from).collect();
    let expected = [
        "step", "t", "mass", "px", "py", "pz", "energy", "H", "D", "M_0", "M_1", "fisher_w", "l3w_norm", "clipped_mass",
        "lp_net_1",
    ];
    assert_eq!(&headers[..expected.len()], &expected);
    let records: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 5);
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let value = |r: &csv::StringRecord, name: &str| r[col(name)].parse::<f64>().unwrap();
    let (first, last) = (&records[0], &records[4]);
    assert!((value(first, "mass") - value(last, "mass")).abs() < 1e-12 * value(first, "mass"));
    assert!(value(last, "H") < value(first, "H"));

    let manifest = read_json(&out_dir.join("manifest.json"));
    let echo: RunConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    let original: RunConfig = serde_json::from_value(cfg).unwrap();
    assert_eq!(echo, original);
    assert_eq!(manifest["summary"]["invariants_held"], json!(true));
    assert!(manifest["versions"]["landau-core"].is_string());
    assert!(out_dir.join("final_state.json").exists());
}

#[test]
fn solve_rejects_unstable_time_step() {
    let dir = TempDir::new().unwrap();
    let (out, _) = solve(dir.path(), "unstable", &run_config(bimodal(), 2, json!(10.0)));
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("stability"));
}

#[test]
fn resolution_override_is_echoed() {
    let dir = TempDir::new().unwrap();
    let config = write(dir.path(), "cfg.json", &run_config(bimodal(), 1, json!("auto")));
    let out_dir = dir.path().join("out");
    let out = landau(&[
        "--resolution", "14", "solve", "--config", config.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["config"]["grid"]["nodes_per_axis"], json!(14));
}

#[test]
fn restart_matches_a_continuous_run() {
    let dir = TempDir::new().unwrap();
    let (full, full_dir) = solve(dir.path(), "full", &run_config(bimodal(), 3, json!("auto")));
    let (first, first_dir) = solve(dir.path(), "first", &run_config(bimodal(), 2, json!("auto")));
    assert_eq!((code(&full), code(&first)), (0, 0));
    let restart = json!({"kind": "custom_file", "path": first_dir.join("final_state.json")});
    let (second, second_dir) = solve(dir.path(), "second", &run_config(restart, 1, json!("auto")));
    assert_eq!(code(&second), 0, "{}", String::from_utf8_lossy(&second.stderr));
    let a = read_json(&full_dir.join("final_state.json"));
    let b = read_json(&second_dir.join("final_state.json"));
    assert_eq!(a["values"], b["values"]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = run_config(bimodal(), 2, json!("auto"));
    let (a, dir_a) = solve(dir.path(), "a", &cfg);
    let (b, dir_b) = solve(dir.path(), "b", &cfg);
    assert_eq!((code(&a), code(&b)), (0, 0));
    for file in ["diagnostics.csv", "final_state.json", "manifest.json"] {
        assert_eq!(fs::read(dir_a.join(file)).unwrap(), fs::read(dir_b.join(file)).unwrap(), "{file}");
    }
}
