use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rgg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgg"))
        .args(args)
        .env("RGG_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn record(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON record")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn alpha_record_shape() {
    let r = record(&rgg(&["alpha", "--d", "2", "--k", "2", "--samples", "200000", "--seed", "7"]));
    assert_eq!(r["command"], "alpha");
    assert_eq!(r["seed"], 7);
    assert_eq!(r["parameters"]["samples"], 200000);
    let v = r["value"].as_f64().unwrap();
    assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-6, "{v}");
    assert!(r.get("wall_time_ms").is_none());
    let timed = record(&rgg(&["alpha", "--d", "1", "--k", "2", "--seed", "1", "--samples", "10000", "--timing"]));
    assert!(timed["wall_time_ms"].as_f64().is_some());
}

#[test]
fn exit_codes() {
    // violated precondition
    let out = rgg(&["alpha", "--d", "2", "--k", "1", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("at least 2"), "{}", stderr(&out));
    // missing parameter
    let out = rgg(&["pbm", "--d", "2", "--k", "2", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lambda_grid"));
    // runtime failure: unwritable output path
    let out = rgg(&["alpha", "--d", "1", "--k", "2", "--seed", "1", "--samples", "10000", "--output", "/nonexistent/dir/x.json"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn config_file_keys() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[regime]\nlamda = 3.0\n");
    let out = rgg(&["pbm", "--config", &bad, "--d", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lamda"), "{}", stderr(&out));

    let empty = write(dir.path(), "empty.toml", "");
    let r = record(&rgg(&["alpha", "--config", &empty, "--d", "1", "--k", "3", "--samples", "10000", "--seed", "2"]));
    assert_eq!(r["parameters"]["k"], 3);

    let cfg = write(
        dir.path(),
        "alpha.toml",
        "[domain]\nd = 1\n[sampling]\nk = 2\nsamples = 10000\nseed = 5\n",
    );
    let out = rgg(&["alpha", "--config", &cfg, "--k", "3"]);
    let r = record(&out);
    assert_eq!(r["parameters"]["k"], 3);
    assert_eq!(r["parameters"]["samples"], 10000);
    assert!(stderr(&out).contains("warning: --k"), "{}", stderr(&out));
    // agreeing values are not a conflict
    let out = rgg(&["alpha", "--config", &cfg, "--k", "2"]);
    assert!(!stderr(&out).contains("warning"));
}

#[test]
fn records_round_trip_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["rgg", "--d", "2", "--n", "300", "--b", "0.3", "--replicates", "50", "--seed", "3"],
        &["mecke", "--d", "1", "--k", "2", "--n", "100", "--r", "0.01", "--outer", "5000", "--seed", "4"],
        &["pbm", "--d", "2", "--k", "2", "--lambda-grid", "2,3", "--replicates", "3000", "--seed", "8"],
        &["energy", "--d", "2", "--z", "1,0;0,1", "--r", "0.1", "--seed", "2"],
    ];
    for args in runs {
        let first = record(&rgg(args));
        let toml = toml::to_string(&first["parameters"]).unwrap();
        let path = write(dir.path(), "echo.toml", &toml);
        let again = record(&rgg(&[args[0], "--config", &path]));
        assert_eq!(first, again, "{}", args[0]);
    }
    let first = record(&rgg(&["verify", "lln", "--d", "1", "--b", "0.5", "--n-grid", "200,400", "--replicates", "50", "--seed", "1"]));
    let path = write(dir.path(), "verify.toml", &toml::to_string(&first["parameters"]).unwrap());
    assert_eq!(first, record(&rgg(&["verify", "lln", "--config", &path])));
}

#[test]
fn csv_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let json = dir.path().join("p.json");
    let out = rgg(&[
        "pbm", "--d", "1", "--k", "2", "--lambda-grid", "1,2,3", "--replicates", "2000", "--seed", "1",
        "--csv", csv.to_str().unwrap(), "--output", json.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,p_hat,p_std_error,rescaled,rescaled_std_error,hits,draws,conditioning_mass");
    assert_eq!(lines.len(), 4);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(r["value"].as_array().unwrap().len(), 3);
}

#[test]
fn missing_seed_is_drawn_and_reported() {
    let out = rgg(&["alpha", "--d", "1", "--k", "2", "--samples", "10000"]);
    let r = record(&out);
    let seed = r["seed"].as_u64().unwrap();
    assert!(stderr(&out).contains(&format!("seed: {seed}")));
    assert_eq!(r["parameters"]["seed"], seed);
}

#[test]
fn verify_variance_rows() {
    let r = record(&rgg(&[
        "verify", "variance", "--d", "2", "--k", "1", "--b", "0.3", "--n-grid", "200,800", "--replicates", "200", "--seed", "4",
    ]));
    assert_eq!(r["command"], "verify variance");
    let rows = r["diagnostics"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["var_over_mean"].as_f64().is_some());
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_rgg"))
        .args(["alpha", "--d", "1", "--k", "2", "--seed", "1"])
        .env("RGG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
