use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn quadprop(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadprop"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sho_quarter_period_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let t = std::f64::consts::FRAC_PI_4.to_string();
    let run = quadprop(&["green1d", "--preset", "sho", "--params", "1", "--t", &t, "--grid", "-2:2:21"], dir.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let csv = std::fs::read_to_string(dir.path().join("green1d.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,re_G,im_G"));
    assert_eq!(lines.count(), 441);

    let phase = read_json(&dir.path().join("phase.json"));
    let get = |k: &str| phase[k].as_f64().unwrap();
    assert!((get("alpha") - 0.5).abs() < 1e-9);
    assert!((get("gamma") - 0.5).abs() < 1e-9);
    assert!((get("beta") + 2f64.sqrt()).abs() < 1e-9);

    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "green1d");
    assert_eq!(manifest["config"]["grid"]["n"], 21);
    assert!(manifest["version"].is_string());
}

#[test]
fn negative_tolerance_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let run = quadprop(&["green1d", "--tol", "-1e-8"], dir.path());
    assert!(!run.status.success());
    let err: Value = serde_json::from_slice(&run.stderr).unwrap();
    assert_eq!(err["code"], "CONFIG_INVALID");
    assert_eq!(err["module"], "cli");
    assert!(err["message"].is_string());
    assert!(err.get("context").is_some());
}

#[test]
fn negative_tolerance_in_config_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"qtol": -1.0}"#).unwrap();
    let run = quadprop(&["characteristic", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert!(!run.status.success());
    let err: Value = serde_json::from_slice(&run.stderr).unwrap();
    assert_eq!(err["code"], "CONFIG_INVALID");
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"coefficients": {"preset": "free"}, "t": 2.0, "time_samples": 7}"#).unwrap();
    let out = dir.path().join("o");
    let run = quadprop(&["characteristic", "--config", cfg.to_str().unwrap(), "--t", "1"], &out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = std::fs::read_to_string(out.join("characteristic.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
    // Free motion: μ = t, and the last sample sits at the flag's t = 1.
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert!((last[1] - 1.0).abs() < 1e-12);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cases: [(&[&str], &str); 4] = [
        (&["green1d", "--t", "0.5"], "green1d.csv"),
        (&["nls", "--family", "kernel", "--time-samples", "4"], "nls.csv"),
        (&["magnetic3d", "--H", "linear:1,0.3", "--F", "const:0.5", "--grid", "5", "--t", "0.5"], "magnetic3d.csv"),
        (&["propagate", "--grid", "-10:10:161"], "psi.csv"),
    ];
    for (args, file) in cases {
        for dir in [&a, &b] {
            let run = quadprop(args, dir.path());
            assert!(run.status.success(), "{args:?}: {}", String::from_utf8_lossy(&run.stderr));
        }
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file} differs between runs");
    }
}

#[test]
fn propagate_reads_initial_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let psi0 = dir.path().join("psi0.csv");
    let mut text = String::from("x,re,im\n");
    for i in 0..241 {
        let x = -12.0 + 0.1 * i as f64;
        let amp = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
        text.push_str(&format!("{x:.16e},{:.16e},{:.16e}\n", amp * x.cos(), amp * x.sin()));
    }
    std::fs::write(&psi0, text).unwrap();
    let out = dir.path().join("o");
    let run = quadprop(&["propagate", "--preset", "free", "--psi0", psi0.to_str().unwrap(), "--t", "0.5"], &out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let meta = read_json(&out.join("propagate.json"));
    assert_eq!(meta["points"], 241);
    assert!(meta["norm_drift"].as_f64().unwrap() < 1e-4);
    let csv = std::fs::read_to_string(out.join("psi.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,re,im"));
    assert_eq!(csv.lines().count(), 242);
}

#[test]
fn malformed_initial_state_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let psi0 = dir.path().join("psi0.csv");
    std::fs::write(&psi0, "x,re,im\n0,1\n").unwrap();
    let run = quadprop(&["propagate", "--psi0", psi0.to_str().unwrap()], &dir.path().join("o"));
    assert!(!run.status.success());
    let err: Value = serde_json::from_slice(&run.stderr).unwrap();
    assert_eq!(err["code"], "CONFIG_INVALID");
}

#[test]
fn nls_past_blowup_fails_with_module_code() {
    let dir = tempfile::tempdir().unwrap();
    let run = quadprop(&["nls", "--family", "modified_oscillator", "--t", "3"], dir.path());
    assert!(!run.status.success());
    let err: Value = serde_json::from_slice(&run.stderr).unwrap();
    assert_eq!(err["code"], "BLOW_UP");
    assert_eq!(err["module"], "nls");
}

#[test]
fn validate_reports_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let run = quadprop(&["validate"], dir.path());
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stdout));
    }
    let x = std::fs::read(a.path().join("report.json")).unwrap();
    let y = std::fs::read(b.path().join("report.json")).unwrap();
    assert_eq!(x, y);
    let report: Value = serde_json::from_slice(&x).unwrap();
    assert_eq!(report["all_passed"], true);
    assert_eq!(report["criteria"].as_array().unwrap().len(), 12);
}

#[test]
fn manifest_config_reproduces_custom_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let half = r#"{"kind": "constant", "params": 0.5}"#;
    let zero = r#"{"kind": "constant", "params": 0.0}"#;
    std::fs::write(
        &cfg,
        format!(r#"{{"coefficients": {{"a": {half}, "b": {half}, "c": {zero}, "d": {zero}, "f": {zero}, "g": {zero}}}, "t": 0.5}}"#),
    )
    .unwrap();
    let first = dir.path().join("first");
    let run = quadprop(&["green1d", "--config", cfg.to_str().unwrap()], &first);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let manifest = read_json(&first.join("manifest.json"));
    let echo = dir.path().join("echo.json");
    std::fs::write(&echo, manifest["config"].to_string()).unwrap();
    let second = dir.path().join("second");
    let run = quadprop(&["green1d", "--config", echo.to_str().unwrap()], &second);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(
        std::fs::read(first.join("green1d.csv")).unwrap(),
        std::fs::read(second.join("green1d.csv")).unwrap()
    );
    // Same Hamiltonian as the unit oscillator: α = cot(t)/2.
    let alpha = read_json(&second.join("phase.json"))["alpha"].as_f64().unwrap();
    assert!((alpha - 0.5 / 0.5f64.tan()).abs() < 1e-9);
}
