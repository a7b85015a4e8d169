//! End-to-end tests of the `riemann` binary: subcommand behavior, formats,
//! environment overrides and the exit-code contract.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_riemann"));
    // Isolate from ambient overrides.
    for var in [
        "RIEMANN_SEED",
        "RIEMANN_TOL",
        "RIEMANN_SURFACE_TOL",
        "RIEMANN_ROOT_TOL",
        "RIEMANN_BRANCH_STANDOFF",
        "RIEMANN_QUAD_TOL",
        "RIEMANN_STEP_TOL",
        "RIEMANN_DRIFT_TOL",
    ] {
        cmd.env_remove(var);
    }
    cmd
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("riemann-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout_of(output: &Output) -> String {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).unwrap()
}

#[test]
fn constants_agrees_with_beta_reference() {
    let out = bin().arg("constants").output().unwrap();
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(json["alpha"][0], -1.0);
    assert_eq!(json["alpha"][1], 1.0);
    let c = json["edge_constant_C"].as_f64().unwrap();
    let reference = json["c_beta_reference"].as_f64().unwrap();
    assert!((c - reference).abs() <= 1e-8);
    assert!((json["edge_length_L"].as_f64().unwrap() - c / 2.0).abs() < 1e-15);
}

#[test]
fn flow_csv_contract() {
    let out = bin()
        .args(["flow", "--start", "0,1", "--t", "1"])
        .output()
        .unwrap();
    let csv = stdout_of(&out);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,re_z,im_z,re_w,im_w,residual");
    let mut max_residual = 0.0f64;
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        // 17 significant digits: mantissa of the form d.16-digits.
        for f in &fields {
            let mantissa = f.split('e').next().unwrap();
            let digits = mantissa.trim_start_matches('-');
            assert_eq!(digits.len(), 18, "bad field width: {f}");
        }
        max_residual = max_residual.max(fields[5].parse::<f64>().unwrap());
        rows += 1;
    }
    assert!(rows > 10);
    assert!(max_residual <= 1e-8, "residual column max {max_residual}");
}

#[test]
fn flow_rejects_off_surface_start_without_project() {
    let out = bin()
        .args(["flow", "--start", "0,1.5", "--t", "0.1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--project"), "stderr: {err}");

    let out = bin()
        .args(["flow", "--start", "0,1.5", "--t", "0.1", "--project"])
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn continue_open_path_and_closed_loop() {
    let w = (1.0f64 - 0.5f64.powi(6)).sqrt();
    let open = r#"{"vertices":[[0,0],[0.5,0]],"w_start":[1,0]}"#;
    let out = bin().args(["continue", "--path", open]).output().unwrap();
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(json["closed"], false);
    assert!((json["w_end"][0].as_f64().unwrap() - w).abs() < 1e-10);
    assert_eq!(json["vertex_ws"].as_array().unwrap().len(), 2);

    let file = tmp("loop.json");
    std::fs::write(
        &file,
        r#"{"vertices":[[0.5,0],[0.5,-0.55],[1.55,-0.55],[1.55,0.55],[0.5,0.55],[0.5,0]],"w_start":[0,0]}"#,
    )
    .unwrap();
    let out = bin()
        .args(["continue", "--path", file.to_str().unwrap()])
        .output()
        .unwrap();
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(json["closed"], true);
    assert_eq!(json["monodromy"], serde_json::json!([1, 0]));
}

#[test]
fn tile_json_and_svg() {
    let out = bin().args(["tile", "--format", "json"]).output().unwrap();
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(json["u"].as_array().unwrap().len(), 6);
    assert_eq!(json["H"].as_array().unwrap().len(), 6);
    assert_eq!(json["K"].as_array().unwrap().len(), 12);
    let edge = json["edge"].as_f64().unwrap();
    assert!(edge > 1.2 && edge < 1.25); // C for the preset

    let out = bin()
        .args(["tile", "--edge", "L", "--format", "svg"])
        .output()
        .unwrap();
    let svg = stdout_of(&out);
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("polygon"));

    let out = bin().args(["tile", "--edge", "2.5", "--format", "json"]).output().unwrap();
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(json["edge"].as_f64().unwrap(), 2.5);
}

#[test]
fn map_grid_and_trace() {
    let out = bin()
        .args(["map", "--grid", "5", "--radius", "0.6"])
        .output()
        .unwrap();
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let items = json.as_array().unwrap();
    assert!(!items.is_empty());
    for item in items {
        assert!(item["z"].is_array() && item["w"].is_array() && item["zeta"].is_array());
    }

    // The mapped flow trace is a straight line: check collinearity of the
    // zeta samples.
    let out = bin()
        .args(["map", "--flow-start", "0,1", "--t", "0.4"])
        .output()
        .unwrap();
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let items = json.as_array().unwrap();
    assert!(items.len() > 3);
    let get = |v: &serde_json::Value| -> (f64, f64) {
        (v["zeta"][0].as_f64().unwrap(), v["zeta"][1].as_f64().unwrap())
    };
    let (x0, y0) = get(&items[0]);
    let (x1, y1) = get(items.last().unwrap());
    let (dx, dy) = (x1 - x0, y1 - y0);
    let len = dx.hypot(dy);
    for item in items {
        let (x, y) = get(item);
        let cross = ((x - x0) * dy - (y - y0) * dx) / len;
        assert!(cross.abs() < 1e-6, "trace image deviates from a line by {cross}");
    }

    let out = bin()
        .args(["map", "--grid", "5", "--format", "svg"])
        .output()
        .unwrap();
    assert!(stdout_of(&out).starts_with("<svg"));
}

#[test]
fn usage_errors_exit_two() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["definitely-not-a-subcommand"],
        vec!["audit", "--bogus-flag"],
        vec!["flow", "--start", "0,1", "--t", "1", "--format", "svg"],
        vec!["flow", "--start", "1", "--t", "1"],
        vec!["tile", "--edge", "banana"],
        vec!["continue", "--path", "/nonexistent/path.json"],
        vec!["--curve", "unknown-preset-or-file", "constants"],
    ];
    for args in cases {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
        assert!(!out.stderr.is_empty(), "args {args:?} produced no diagnostics");
    }
    // Unknown subcommand prints usage.
    let out = bin().arg("definitely-not-a-subcommand").output().unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn seed_env_override_matches_flag() {
    let a = tmp("env_seed.json");
    let b = tmp("flag_seed.json");
    let out = bin()
        .env("RIEMANN_SEED", "11")
        .args(["audit", "--out", a.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = bin()
        .args(["audit", "--seed", "11", "--out", b.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let config = tmp("config.json");
    std::fs::write(&config, r#"{"seed": 21, "format": "md"}"#).unwrap();
    let md = tmp("from_config.md");
    let out = bin()
        .args(["--config", config.to_str().unwrap(), "audit", "--out", md.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&md).unwrap();
    assert!(text.starts_with("# Audit report"));
    assert!(text.contains("seed 21"));

    // A flag beats the config file.
    let json_out = tmp("flag_beats_config.json");
    let out = bin()
        .args([
            "--config",
            config.to_str().unwrap(),
            "--format",
            "json",
            "audit",
            "--seed",
            "5",
            "--out",
            json_out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    assert_eq!(report["environment"]["seed"], 5);

    let bad = tmp("bad_config.json");
    std::fs::write(&bad, r#"{"sneed": 3}"#).unwrap();
    let out = bin()
        .args(["--config", bad.to_str().unwrap(), "constants"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn audit_rejects_file_curves() {
    let curve_file = tmp("curve.json");
    std::fs::write(&curve_file, r#"{"coeffs":[[0,2,1,0],[6,0,1,0]],"c":[1,0]}"#).unwrap();
    // File curves work for computational subcommands.
    let out = bin()
        .args(["--curve", curve_file.to_str().unwrap(), "constants"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // The claim registry is preset-specific.
    let out = bin()
        .args(["--curve", curve_file.to_str().unwrap(), "audit"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
