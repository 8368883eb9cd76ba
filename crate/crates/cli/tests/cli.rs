//! End-to-end checks of the command-line interface: exit codes, file
//! schemas, and reproducibility.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chsh"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("chsh-cli-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

#[test]
fn point_defaults_reach_tsirelson() {
    let out = bin().arg("point").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    let value = report["value"].as_f64().unwrap();
    assert!((value - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-3);
    assert_eq!(report["local_bound_violated"], serde_json::json!(true));
}

#[test]
fn point_wide_packet_stays_below_local_bound() {
    let out = bin().args(["point", "--sx", "0.08"]).output().unwrap();
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert!(report["value"].as_f64().unwrap() < 2.0);
}

#[test]
fn point_with_phi_reports_count_probabilities() {
    let out = bin().args(["point", "--phi", "0"]).output().unwrap();
    assert!(out.status.success());
    let report = stdout_json(&out);
    let p_plus = report["mz"]["p_plus"].as_f64().unwrap();
    let p_minus = report["mz"]["p_minus"].as_f64().unwrap();
    assert!((p_plus + p_minus - 1.0).abs() < 1e-12);
    assert!(p_plus > 0.99);
}

#[test]
fn malformed_config_exits_one_and_names_key() {
    let dir = temp_dir("badcfg");
    let path = dir.join("bad.cfg");
    std::fs::write(&path, "resolution = banana\n").unwrap();
    let out = bin()
        .args(["point", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("resolution"), "stderr: {stderr}");

    let path2 = dir.join("unknown.cfg");
    std::fs::write(&path2, "wibble = 3\n").unwrap();
    let out = bin()
        .args(["point", "--config", path2.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wibble"));
}

#[test]
fn point_quadrature_failure_exits_two() {
    // a near-delta center off both grids cannot converge under doubling
    let out = bin()
        .args(["point", "--ax", "0.04", "--sx", "0.00001", "--resolution", "16"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not converge"));
}

#[test]
fn invalid_resolution_rejected() {
    let out = bin().args(["point", "--resolution", "100"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["point", "--resolution", "1024"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_schema_and_byte_identical_reruns() {
    let dir = temp_dir("sweep");
    let run = |name: &str| {
        let out = bin()
            .env("CHSH_OUT_DIR", &dir)
            .args([
                "sweep", "--sx", "0.03", "--points", "8", "--out", name,
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (out.stdout.clone(), std::fs::read(dir.join(name)).unwrap())
    };
    let (stdout_a, csv_a) = run("a.csv");
    let (_, csv_b) = run("b.csv");
    assert_eq!(csv_a, csv_b, "reruns must be byte-identical");

    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a_xbar_frac,bell_value,converged"));
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 3, "row {line}");
        for v in &fields[..2] {
            assert!(v.parse::<f64>().unwrap().is_finite(), "field {v}");
        }
        assert!(fields[2] == "true" || fields[2] == "false");
        rows += 1;
    }
    assert_eq!(rows, 8);

    let report: serde_json::Value = serde_json::from_slice(&stdout_a).unwrap();
    assert_eq!(report["rows"], serde_json::json!(8));
    assert_eq!(report["converged_rows"], serde_json::json!(8));
}

#[test]
fn sweep_empty_grid_exits_one() {
    let dir = temp_dir("sweep-empty");
    let out = bin()
        .env("CHSH_OUT_DIR", &dir)
        .args(["sweep", "--points", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn threshold_preset_families_land_in_reference_windows() {
    let out = bin()
        .args(["threshold", "--preset", "fig1a"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report = stdout_json(&out);
    let sigma = report["sigma_xbar_star_frac"].as_f64().unwrap();
    assert!((0.045..=0.053).contains(&sigma), "fig1a sigma* {sigma}");

    let out = bin()
        .args(["threshold", "--preset", "fig1b"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report = stdout_json(&out);
    let sigma = report["sigma_xbar_star_frac"].as_f64().unwrap();
    assert!((0.035..=0.043).contains(&sigma), "fig1b sigma* {sigma}");
}

#[test]
fn threshold_bracket_errors() {
    // inverted bracket: configuration error
    let out = bin()
        .args(["threshold", "--bracket-lo", "0.09", "--bracket-hi", "0.02"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // bracket entirely inside the violating regime: numerical error
    let out = bin()
        .args([
            "threshold", "--preset", "fig1a", "--bracket-lo", "0.01", "--bracket-hi",
            "0.015",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no sign change"), "stderr: {stderr}");
}

#[test]
fn grating_reports_width_maps_and_warnings() {
    let out = bin().arg("grating").output().unwrap();
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["ell"], serde_json::json!(2.0));
    let sx = report["sigma_xbar"].as_f64().unwrap();
    assert!((sx - 0.01).abs() < 1e-12);
    assert_eq!(report["validity_warning"], serde_json::json!(false));

    // L / sigma = 0.5 raises the validity warning
    let out = bin().args(["grating", "--sigma", "2.0"]).output().unwrap();
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["validity_warning"], serde_json::json!(true));

    // an extended envelope squeezes the modular momentum
    let out = bin().args(["grating", "--sigma", "1e4"]).output().unwrap();
    let report = stdout_json(&out);
    assert!(report["sigma_pbar_frac"].as_f64().unwrap() < 1e-6);

    // nonpositive parameters are configuration errors
    let out = bin().args(["grating", "--kappa", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sample_single_shot_rows_and_determinism() {
    let dir = temp_dir("sample");
    let out = bin()
        .env("CHSH_OUT_DIR", &dir)
        .args(["sample", "--shots", "1", "--out", "one.csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.join("one.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("setting_a,setting_b,kk,kl,lk,ll"));
    for line in lines {
        let counts: u64 = line
            .split(',')
            .skip(2)
            .map(|v| v.parse::<u64>().unwrap())
            .sum();
        assert_eq!(counts, 1, "row {line}");
    }

    let rerun = |name: &str| {
        bin()
            .env("CHSH_OUT_DIR", &dir)
            .args(["sample", "--shots", "500", "--seed", "7", "--out", name])
            .output()
            .unwrap();
        std::fs::read(dir.join(name)).unwrap()
    };
    assert_eq!(rerun("s1.csv"), rerun("s2.csv"));
}

#[test]
fn sample_large_run_tracks_analytic_chsh() {
    let dir = temp_dir("sample-large");
    let out = bin()
        .env("CHSH_OUT_DIR", &dir)
        .args(["sample", "--shots", "100000", "--seed", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report = stdout_json(&out);
    let pull = report["pull"].as_f64().unwrap().abs();
    assert!(pull < 5.0, "empirical CHSH pull {pull}");
}
