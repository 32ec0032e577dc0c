//! End-to-end tests of the `gto` binary: exit codes, report shape, CSV
//! round-trips, input plumbing, and seed resolution.

use std::fs;
use std::process::{Command, Output};

use gto_core::fidelity::conditional_fidelity;
use gto_core::gaussian::{
    example_channel_1, InputState, MeasurementSpec, Squeezing, ThreeModeState,
};
use gto_core::nalgebra::{Complex, Matrix2, Vector6};

fn gto(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gto"))
        .args(args)
        .env_remove("GTO_SEED")
        .output()
        .expect("binary spawns")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
}

#[test]
fn check_builtin_state_passes() {
    let out = gto(&["check", "--state", "example1"]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["command"], "check");
    assert_eq!(report["results"]["genuine"]["passed"], true);
    assert_eq!(report["results"]["reduced_pair_separable"]["passed"], true);
    assert_eq!(report["seed"].as_u64(), Some(12648430));
    // timing goes to stderr, never into the report
    assert!(String::from_utf8_lossy(&out.stderr).contains("elapsed"));
}

#[test]
fn check_rejects_unphysical_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("below-vacuum.json");
    let tenth = Matrix2::identity() * 0.1;
    let state = ThreeModeState::new(
        tenth,
        Matrix2::zeros(),
        Matrix2::zeros(),
        tenth,
        Matrix2::zeros(),
        tenth,
        Vector6::zeros(),
    )
    .unwrap();
    fs::write(&path, state.to_json()).unwrap();
    let out = gto(&["check", "--state", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["results"]["genuine"]["passed"], false);
    assert!(report["results"]["reduced_pair_separable"].is_null());
}

#[test]
fn malformed_state_json_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(&path, "{ this is not json").unwrap();
    let out = gto(&["check", "--state", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1"), "stderr: {err}");
}

#[test]
fn missing_state_file_exits_2() {
    let out = gto(&["check", "--state", "./no-such-state.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_flag_exits_2() {
    let out = gto(&["check", "--state", "example1", "--frobnicate"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_symmetric_variance_exits_2() {
    assert_eq!(code(&gto(&["check", "--state", "symmetric:q=0.2"])), 2);
    assert_eq!(code(&gto(&["check", "--state", "symmetric:q=abc"])), 2);
    assert_eq!(code(&gto(&["check", "--state", "symmetric:0.7"])), 2);
}

#[test]
fn fidelity_reports_frozen_values() {
    let out = gto(&[
        "fidelity", "--state", "example1", "--xi", "0.087", "--phi", "0",
    ]);
    assert_eq!(code(&out), 0);
    let r = stdout_json(&out);
    let f = r["results"]["fidelity"].as_f64().unwrap();
    let bare = r["results"]["bare_fidelity"].as_f64().unwrap();
    assert!((f - 0.6198514404227442).abs() < 1e-12);
    assert!((bare - 0.10902947342379074).abs() < 1e-12);
    assert_eq!(r["parameters"]["xi"], "0.087");
}

#[test]
fn fidelity_accepts_homodyne_limits() {
    let zero = gto(&["fidelity", "--state", "example2", "--xi", "0", "--phi", "0"]);
    assert_eq!(code(&zero), 0);
    let f0 = stdout_json(&zero)["results"]["fidelity"].as_f64().unwrap();
    assert!((f0 - 0.5265506281199429).abs() < 1e-12);

    let inf = gto(&["fidelity", "--state", "example2", "--xi", "inf", "--phi", "0"]);
    assert_eq!(code(&inf), 0);
    let fi = stdout_json(&inf)["results"]["fidelity"].as_f64().unwrap();
    assert!((fi - 0.43816419262736983).abs() < 1e-12);
}

#[test]
fn fidelity_rejects_negative_squeezing() {
    let out = gto(&[
        "fidelity", "--state", "example1", "--xi", "-0.5", "--phi", "0",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn squeezed_input_matches_library() {
    let spec = MeasurementSpec::new(Squeezing::Finite(0.3), 0.4).unwrap();
    let input = InputState::squeezed(2.0, 0.0, Complex::new(0.0, 0.0)).unwrap();
    let expected = conditional_fidelity(&example_channel_1(), &input, &spec)
        .unwrap()
        .fidelity;
    let out = gto(&[
        "fidelity", "--state", "example1", "--input", "squeezed:2,0", "--xi", "0.3", "--phi",
        "0.4",
    ]);
    assert_eq!(code(&out), 0);
    let f = stdout_json(&out)["results"]["fidelity"].as_f64().unwrap();
    assert!((f - expected).abs() < 1e-12);
}

#[test]
fn input_file_displacement_does_not_change_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("displaced-vacuum.json");
    fs::write(
        &path,
        r#"{ "v_in": [[0.5, 0.0], [0.0, 0.5]], "amplitude": [1.2, -0.3] }"#,
    )
    .unwrap();
    let from_file = gto(&[
        "fidelity", "--state", "example1", "--input", path.to_str().unwrap(), "--xi", "1",
    ]);
    let vacuum = gto(&["fidelity", "--state", "example1", "--xi", "1"]);
    assert_eq!(code(&from_file), 0);
    let a = stdout_json(&from_file)["results"]["fidelity"].as_f64().unwrap();
    let b = stdout_json(&vacuum)["results"]["fidelity"].as_f64().unwrap();
    assert_eq!(a, b);
}

#[test]
fn malformed_input_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken-input.json");
    fs::write(&path, "{\n  \"v_in\": [[0.5, 0.0],\n").unwrap();
    let out = gto(&[
        "fidelity", "--state", "example1", "--input", path.to_str().unwrap(), "--xi", "1",
    ]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "stderr: {err}");
}

#[test]
fn optimize_reports_homodyne_class() {
    let out = gto(&["optimize", "--state", "example2"]);
    assert_eq!(code(&out), 0);
    let r = stdout_json(&out);
    assert_eq!(r["results"]["class"], "homodyne");
    assert_eq!(r["results"]["xi"], "0");
    let quad = r["results"]["quadrature_phase"].as_f64().unwrap();
    assert!((quad - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    let f = r["results"]["fidelity"].as_f64().unwrap();
    assert!((f - 0.5265506281199429).abs() < 1e-9);
    assert!(!r["results"]["candidates"].as_array().unwrap().is_empty());
}

#[test]
fn optimize_rejects_unphysical_state() {
    let out = gto(&["optimize", "--state", "symmetric:q=0.2"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_q_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("sweep.csv");
    let out = gto(&[
        "sweep-q", "--n", "5", "--csv", csv_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "q,gamma,F_tr,F_assisted");
    assert_eq!(lines.len(), 6);
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert!((first[0] - 0.5).abs() < 1e-11);
    assert!((first[3] - 5.0 / 11.0).abs() < 1e-11);
    for line in &lines[1..] {
        let row: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(row[1] < 0.0, "gamma must stay negative: {line}");
        assert!(row[3] >= row[2] - 1e-12, "assistance must not hurt: {line}");
    }
    // the JSON report carries the same rows
    let r = stdout_json(&out);
    assert_eq!(r["results"]["rows"].as_array().unwrap().len(), 5);
}

#[test]
fn sweep_q_rejects_bad_range() {
    assert_eq!(code(&gto(&["sweep-q", "--q-min", "0.1"])), 2);
    assert_eq!(code(&gto(&["sweep-q", "--q-min", "3", "--q-max", "2"])), 2);
    assert_eq!(code(&gto(&["sweep-q", "--n", "1"])), 2);
}

#[test]
fn sweep_phi_csv_shows_sign_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("directions.csv");
    let out = gto(&[
        "sweep-phi", "--state", "example2", "--n", "8", "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "phi,gamma,gamma_shift,p,xi_bar,F_tilde,F_zero");
    assert_eq!(lines.len(), 9);
    let mut saw = [false, false];
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 7);
        match cols[3] {
            "0" => {
                saw[0] = true;
                // outside the interior region the best squeezing is a limit
                assert!(cols[4] == "0" || cols[4] == "inf", "row: {line}");
            }
            "1" => {
                saw[1] = true;
                let xi: f64 = cols[4].parse().unwrap();
                assert!(xi > 0.0);
            }
            other => panic!("p column must be 0/1, got {other}"),
        }
        let f_tilde: f64 = cols[5].parse().unwrap();
        let f_zero: f64 = cols[6].parse().unwrap();
        assert!(f_tilde >= f_zero - 1e-11, "branch max below limit: {line}");
    }
    assert!(saw[0] && saw[1], "example2 has both sign patterns");
}

#[test]
fn seed_env_is_recorded() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_gto"))
            .args(["check", "--state", "example1"])
            .env("GTO_SEED", seed)
            .output()
            .expect("binary spawns")
    };
    let decimal = run("123");
    assert_eq!(code(&decimal), 0);
    assert_eq!(stdout_json(&decimal)["seed"].as_u64(), Some(123));
    let hex = run("0xff");
    assert_eq!(stdout_json(&hex)["seed"].as_u64(), Some(255));
    let bad = run("not-a-seed");
    assert_eq!(code(&bad), 2);
}

#[test]
fn out_flag_writes_file_and_keeps_stdout_empty() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = gto(&[
        "check", "--state", "example1", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["command"], "check");
}
