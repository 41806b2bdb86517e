use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn twophase(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_twophase"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("TWOPHASE_OUT")
        .env_remove("TWOPHASE_THREADS")
        .output()
        .expect("spawn twophase")
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.in.json");
    fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn calibrate_writes_band_cutoffs() {
    let dir = tempfile::tempdir().unwrap();
    let o = twophase(&["calibrate"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("calibration.json")).unwrap()).unwrap();
    let a0 = v["calibration"]["a0"].as_f64().unwrap();
    let ai = v["calibration"]["a_inf"].as_f64().unwrap();
    assert!(0.0 < a0 && a0 < 1.0 && 2.0 <= ai);
    assert!(dir.path().join("config.json").exists());
}

#[test]
fn roots_csv_has_seven_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"numerics": {"roots": {"a_min": 1e-4, "a_max": 0.2, "count": 9}}}"#);
    let o = twophase(&["roots", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("roots.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 10);
    assert!(lines[0].starts_with("A,re_lambda_plus,im_lambda_plus"));
    for l in &lines {
        assert_eq!(l.split(',').count(), 7, "{l}");
    }
    // Conjugate pair in the left half-plane.
    for l in &lines[1..] {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] < 0.0 && v[1] == v[3] && v[2] == -v[4]);
    }
}

#[test]
fn config_echo_is_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"times": [0.5, 2.0], "numerics": {"grid": {"count": 32, "xi_max": 4.0}}}"#);
    let o = twophase(&["evolve", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let echo: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(echo["times"], serde_json::json!([0.5, 2.0]));
    assert_eq!(echo["numerics"]["grid"]["count"], 32);
    assert_eq!(echo["output"].as_str().unwrap(), dir.path().to_str().unwrap());
    let spectral = fs::read_to_string(dir.path().join("spectral.csv")).unwrap();
    assert!(spectral.starts_with("band,xi1,x_N,component,side,re,im,t\n"));
    let height = fs::read_to_string(dir.path().join("height.csv")).unwrap();
    assert_eq!(height.lines().count(), 1 + 2 * 32);
}

#[test]
fn empty_decay_specs_write_no_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = twophase(&["decay"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let decay_files = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("decay_"))
        .count();
    assert_eq!(decay_files, 0);
}

#[test]
fn high_band_decay_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"specs": [{"N": 2, "p": 1.0, "q": 2.0, "component": "H", "part": "high"}],
            "numerics": {"decay_samples": 8, "norm": {"rel_tol": 1e-4, "xn_order": 4, "xn_ratio": 4.0, "domain_tol": 2e-2}}}"#,
    );
    let o = twophase(&["decay", "--config", &cfg], dir.path());
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
    let rep: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("decay_H_1_2.json")).unwrap()).unwrap();
    assert!(rep["fitted_gamma"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(dir.path().join("decay_H_1_2.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,norm"));
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn errors_are_structured_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = twophase(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let cfg = write_config(dir.path(), r#"{"times": [3.0, 1.0]}"#);
    let o = twophase(&["evolve", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(err["error"], "Config");
    assert_eq!(err["exit_code"], 2);

    let o = twophase(&["evolve", "--config", "/nonexistent/cfg.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn environment_overrides_output_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_twophase"))
        .arg("symbols")
        .env("TWOPHASE_OUT", dir.path())
        .env("TWOPHASE_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("symbols.csv").exists());
    assert!(dir.path().join("constants.json").exists());

    let o = Command::new(env!("CARGO_BIN_EXE_twophase"))
        .arg("symbols")
        .env("TWOPHASE_OUT", dir.path())
        .env("TWOPHASE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn evolve_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"times": [1.0], "numerics": {"grid": {"count": 64, "xi_max": 8.0}}}"#);
    let mut outs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = twophase(&["evolve", "--config", &cfg, "--threads", threads], &out);
        assert!(o.status.success());
        outs.push(fs::read(out.join("spectral.csv")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn shipped_config_parses() {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
    let cfg = twophase_core::cli::RunConfig::load(&p).unwrap();
    assert_eq!(cfg.specs.len(), 3);
    assert!(cfg.specs[1].q.is_infinite());
}
