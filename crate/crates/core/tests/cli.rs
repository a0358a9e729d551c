use std::path::PathBuf;
use std::process::Command;

use clap::Parser;
use serde_json::Value;
use thermospec::cli::{self, Envelope, RunConfig};

fn model(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples/models")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["thermospec"];
    full.extend_from_slice(args);
    let status = cli::run(full, &mut out, &mut err);
    (status, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn sinf_on_gauss() {
    let (status, out, _) = run(&["sinf", "--model", &model("gauss.json"), "--tol", "1e-3"]);
    assert_eq!(status, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["result"]["value"].as_f64().unwrap() - 0.5).abs() <= 1e-3);
    assert!(v["result"]["certificate"].is_object());
    assert_eq!(v["version"], cli::VERSION);
}

#[test]
fn spectrum_csv_has_five_rows() {
    let (status, out, _) = run(&[
        "spectrum",
        "--model",
        &model("doubling.json"),
        "--potential",
        &model("chi1.json"),
        "--points",
        "5",
    ]);
    assert_eq!(status, 0);
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&headers[..7], &["alpha", "dim", "t", "q", "regime", "resid1", "resid2"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[2][1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(&rows[0][4], "endpoint");
}

#[test]
fn spectrum_to_file_reports_rows() {
    let dir = std::env::temp_dir().join(format!("thermospec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("curve.csv");
    let (status, out, _) = run(&[
        "spectrum",
        "--model",
        &model("flat_example.json"),
        "--potential",
        &model("chi1.json"),
        "--alpha-min",
        "0",
        "--alpha-max",
        "1",
        "--points",
        "11",
        "--transitions",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(status, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let n = v["result"]["rows"].as_u64().unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count() as u64, n + 1);
    assert!(text.contains("alpha_lower") && text.contains("alpha_upper") && text.contains("alpha_tilde"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn flat_bounds_json() {
    let (status, out, _) = run(&["flat-bounds", "--model", &model("flat_example.json")]);
    assert_eq!(status, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let qm = v["result"]["q_minus"].as_f64().unwrap();
    assert!((qm - (0.4f64 / 0.55).ln()).abs() < 1e-9);
}

#[test]
fn freq_dim_and_feasible() {
    let (status, out, _) = run(&["freq-dim", "--model", &model("doubling.json"), "--freqs", "0.25,0.75", "--mode", "full"]);
    assert_eq!(status, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["regime"], "variational");
    let (status, out, _) = run(&[
        "feasible",
        "--model",
        &model("gauss.json"),
        "--gamma",
        &model("gauss_harmonic_target.json"),
        "--eps",
        "1e-6",
        "--q",
        "3",
    ]);
    assert_eq!(status, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["verdict"], "feasible-with-witness");
}

#[test]
fn pressure_root_and_sample() {
    let (status, out, _) = run(&["pressure", "--model", &model("doubling.json"), "--t", "1", "--q", "2", "--n", "4"]);
    assert_eq!(status, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["levels"].as_array().unwrap().len(), 4);
    let (status, out, _) = run(&["root", "--model", &model("moran_pair.json"), "--lo", "0.1", "--hi", "2"]);
    assert_eq!(status, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["result"]["t"].as_f64().unwrap() - 0.694241913630617).abs() < 1e-9);
    let (status, out, _) = run(&[
        "sample",
        "--model",
        &model("gauss.json"),
        "--word",
        "1",
        "--horizon",
        "30",
        "--potential",
        &model("harmonic.json"),
    ]);
    assert_eq!(status, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["averages"][0][29].as_f64(), Some(1.0));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["sinf", "--model", "/nonexistent/model.json"]).0, 2);
    assert_eq!(run(&["nonsense"]).0, 2);
    assert_eq!(run(&["sinf"]).0, 2);
    // s_inf of a finite system is fine; a bracket that does not straddle is numeric
    assert_eq!(run(&["root", "--model", &model("moran_pair.json"), "--lo", "1", "--hi", "2"]).0, 3);
    let (status, _, err) = run(&["freq-dim", "--model", &model("doubling.json"), "--freqs", "-0.5,0.75"]);
    assert_eq!(status, 2, "{err}");
}

#[test]
fn tiny_budget_reports_partial_result() {
    let (status, out, _) = run(&["--budget", "10", "pressure", "--model", &model("gauss.json"), "--t", "1", "--q", "3", "--n", "3"]);
    assert_eq!(status, 3);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["result"]["partial"]["levels"].is_array());
}

#[test]
fn verify_exit_zero() {
    let (status, out, _) = run(&["verify", "--suite", "measures"]);
    assert_eq!(status, 0);
    assert!(out.lines().all(|l| !l.starts_with("FAIL")));
}

#[test]
fn output_round_trips_and_is_deterministic() {
    let m = model("flat_example.json");
    let args = ["flat-bounds", "--model", m.as_str()];
    let (_, a, _) = run(&args);
    let (_, b, _) = run(&args);
    assert_eq!(a, b);
    let env: Envelope<Value> = serde_json::from_str(&a).unwrap();
    let again: Value = serde_json::from_str(&serde_json::to_string(&env).unwrap()).unwrap();
    assert_eq!(again, serde_json::from_str::<Value>(&a).unwrap());
    let parsed: RunConfig = env.config;
    assert_eq!(parsed.command, RunConfig::try_parse_from(std::iter::once("thermospec").chain(args)).unwrap().command);
}

#[test]
fn workers_do_not_change_results() {
    let g = model("gauss.json");
    let outs: Vec<Value> = ["1", "4", "8"]
        .iter()
        .map(|w| {
            let (_, o, _) = run(&["--workers", w, "pressure", "--model", &g, "--t", "0.9", "--q", "30", "--n", "3"]);
            serde_json::from_str::<Value>(&o).unwrap()["result"].clone()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], outs[2]);
}

#[test]
fn binary_runs() {
    let out = Command::new(env!("CARGO_BIN_EXE_thermospec"))
        .args(["freq-dim", "--model", &model("doubling.json"), "--freqs", "0.5,0.5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["dimension"].as_f64(), Some(1.0));
}
