//! End-to-end tests of the `specband` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use specband_core::geometry::{generate_points, PointGenerator};
use specband_core::io::{read_kernel_binary, write_pointset};
use specband_core::GridSpec;

fn specband(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specband"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn shipped(name: &str) -> String {
    format!("{}/../../configs/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

const SMALL: &str = r#"{
    "name": "small",
    "grid": {"lengths": [16], "points": [64]},
    "symbol": {"kind": "constant", "b": 1.0},
    "theta": 1.0,
    "omega": {"sqrt_over_pi": 0.9375},
    "point_sets": [{"name": "integers", "generator": {"kind": "uniform", "spacing": 1.0}}],
    "density_radii": [1, 2, 4],
    "localization_radii": [1, 2, 4],
    "checks": ["frame", "density", "trace", "localization", "heat"],
    "heat": {"times": [0.5]},
    "seed": 1
}"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classical_run_reports_shannon_frame() {
    let dir = tempfile::tempdir().unwrap();
    let out = specband(&["run", &shipped("classical_pw"), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(report["spectral"]["band_dim"], 31);
    let frame = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "frame").unwrap();
    let integers = &frame["details"]["integers"]["frame"];
    assert!((integers["a"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!((integers["b_upper"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(integers["sampling"], "stable-sampling");
    assert!(dir.path().join("frame.csv").exists());
    let meta: Value = serde_json::from_slice(&std::fs::read(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert!(meta["timestamp"].is_string());
    assert!(report.get("timestamp").is_none());
}

#[test]
fn vbw_run_writes_sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = specband(&["run", &shipped("vbw_phase_transition"), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "relative,density,points,a,b_upper,lambda_min");
    assert_eq!(lines.len(), 6);
}

#[test]
fn runs_are_byte_identical() {
    let cfg_dir = tempfile::tempdir().unwrap();
    let cfg = write_config(cfg_dir.path(), SMALL);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(specband(&["run", &cfg, "--out", path(d.path())]).status.code(), Some(0));
    }
    let diff = specband_cli::verify::compare_dirs(a.path(), b.path()).unwrap();
    assert!(diff.is_empty(), "{diff:?}");
}

#[test]
fn radius_above_quarter_box_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("[1, 2, 4],\n    \"localization", "[1, 2, 5],\n    \"localization"));
    let out = specband(&["run", &cfg, "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("L/4"));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn failing_hard_check_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace(r#""times": [0.5]"#, r#""times": [0.5], "constant_bounds": [0.5, 0.6]"#);
    let cfg = write_config(dir.path(), &text);
    let out = specband(&["run", &cfg, "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn size_cap_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace(r#""seed": 1"#, r#""seed": 1, "size_cap": 32"#));
    assert_eq!(specband(&["run", &cfg, "--out", path(dir.path())]).status.code(), Some(4));
}

#[test]
fn kernel_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let bin = dir.path().join("k.bin");
    assert_eq!(specband(&["kernel", "--config", &cfg, "--dump", path(&bin), "--format", "bin"]).status.code(), Some(0));
    let (n, values) = read_kernel_binary(std::fs::File::open(&bin).unwrap()).unwrap();
    assert_eq!(n, 64);
    // a ≡ 1 on L = 16 with √Ω = 15π/16: 15 modes, k(x,x) = 15/16
    assert!((values[0] - 15.0 / 16.0).abs() < 1e-12);
    let diag = dir.path().join("diag.csv");
    assert_eq!(specband(&["kernel", "--config", &cfg, "--dump", path(&diag), "--diagonal"]).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&diag).unwrap().lines().count(), 65);
}

#[test]
fn density_of_a_pointset_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let grid = GridSpec::one_d(16.0, 64).unwrap();
    let set = generate_points(&PointGenerator::Uniform { spacing: 0.5 }, &grid, None).unwrap();
    let mut buf = Vec::new();
    write_pointset(&set, &mut buf).unwrap();
    let pts = dir.path().join("points.csv");
    std::fs::write(&pts, buf).unwrap();
    let out = specband(&["density", "--config", &cfg, "--points", path(&pts), "--radii", "1,2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r[1], 2.0);
        assert_eq!(r[2], 2.0);
    }
}

#[test]
fn malformed_pointset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let pts = dir.path().join("points.csv");
    std::fs::write(&pts, "x\n0.1\n").unwrap();
    let out = specband(&["density", "--config", &cfg, "--points", path(&pts)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn export_operator_writes_coo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let coo = dir.path().join("op.coo");
    assert_eq!(specband(&["export-operator", "--config", &cfg, "--out", path(&coo)]).status.code(), Some(0));
    let text = std::fs::read_to_string(&coo).unwrap();
    assert_eq!(text.lines().next().unwrap(), "# 64 64 192");
}

#[test]
fn verify_suites_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = specband(&["verify", "sobolev", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[PASS] criterion 11"));
    assert!(dir.path().join("verify_sobolev.json").exists());
    let out = specband(&["verify", "kernels", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let out = specband(&["verify", "localization", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    assert_eq!(specband(&["verify", "everything"]).status.code(), Some(2));
}
