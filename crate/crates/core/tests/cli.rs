use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_equivprobe");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn equivprobe")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("spawn equivprobe")
}

const STEP_CONFIG: &str = r#"{
  "signals": [{"kind": "heaviside", "step": 0}],
  "layers": [{"taps": [2, -2], "origin": 1, "bias": -1, "nonlinearity": "relu", "boundary": "zero"}],
  "grids": [{"x0": -1, "dx": 0.5, "n": 4}],
  "deltas": [0.25],
  "schemes": ["linear"],
  "discretizers": ["avg"]
}"#;

#[test]
fn repro_csv_to_stdout() {
    let out = run(&["repro"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| l.ends_with(",true")).collect();
    assert_eq!(rows.len(), 5, "{text}");
}

#[test]
fn repro_json_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("repro.json");
    let out = run(&["repro", "--format", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["all_match"], true);
    assert_eq!(v["translation_residual"]["linf"], 0.5);
    assert_eq!(v["rows"][3]["quantity"], "translated_output");
    assert_eq!(v["rows"][1]["values"], serde_json::json!([0.0, 0.0, 0.5, 1.0]));
}

#[test]
fn repro_unwritable_path_exits_2() {
    let out = run(&["repro", "--out", "/definitely/not/a/dir/out.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repro_corrupted_kernel_exits_1() {
    let out = run(&["repro", "--taps", "2,-1.5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("mismatch"), "{err}");
}

#[test]
fn sweep_empty_config_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.json"), "{}").unwrap();
    let out = run_in(dir.path(), &["sweep", "--config", "empty.json", "--out", "out.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(csv, "n,delta,delta_px,scheme,boundary,discretizer,l2,linf,skipped,reason\n");
}

#[test]
fn sweep_step_singleton() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), STEP_CONFIG).unwrap();
    let out = run_in(dir.path(), &["sweep", "--config", "c.json", "--out", "out.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert_eq!(row, "4,0.25,0.5,linear,zero,avg,0.7071067811865476,0.5,false,");
}

#[test]
fn sweep_fourier_on_zero_boundary_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), STEP_CONFIG.replace("\"linear\"", "\"fourier\"")).unwrap();
    let out = run_in(dir.path(), &["sweep", "--config", "c.json", "--out", "out.json", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out.json")).unwrap()).unwrap();
    assert_eq!(v[0]["skipped"], true);
    assert!(v[0]["l2"].is_null());
    assert!(v[0]["reason"].as_str().unwrap().contains("circular"));
}

#[test]
fn sweep_csv_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    let config = STEP_CONFIG
        .replace(r#"[{"kind": "heaviside", "step": 0}]"#, r#"[{"kind": "heaviside", "step": 0}, {"kind": "gaussian", "amplitude": 1, "center": 0.1, "width": 0.3}]"#)
        .replace("[0.25]", r#"[0.25, {"px": 0.3}, -0.1]"#)
        .replace(r#"["linear"]"#, r#"["linear", "cubic"]"#);
    fs::write(dir.path().join("c.json"), config).unwrap();
    assert!(run_in(dir.path(), &["sweep", "--config", "c.json", "--out", "o.csv"]).status.success());
    assert!(run_in(dir.path(), &["sweep", "--config", "c.json", "--out", "o.json", "--format", "json"]).status.success());
    let json: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o.json")).unwrap()).unwrap();
    let csv = fs::read_to_string(dir.path().join("o.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(lines.len(), json.len());
    assert_eq!(json.len(), 12);
    for (line, row) in lines.iter().zip(&json) {
        let cols: Vec<&str> = line.split(',').collect();
        for (col, key) in [(1, "delta"), (2, "delta_px"), (6, "l2"), (7, "linf")] {
            let from_csv: f64 = cols[col].parse().unwrap();
            assert_eq!(from_csv.to_bits(), row[key].as_f64().unwrap().to_bits(), "{key}");
        }
    }
}

#[test]
fn sweep_svg_plots() {
    let dir = tempfile::tempdir().unwrap();
    let config = STEP_CONFIG
        .replace("[0.25]", "[0.05, 0.1, 0.25, 0.4]")
        .replace(r#"[{"x0": -1, "dx": 0.5, "n": 4}]"#, r#"[{"x0": -1, "dx": 0.5, "n": 4}, {"x0": -1, "dx": 0.125, "n": 16}]"#);
    fs::write(dir.path().join("c.json"), config).unwrap();
    let out = run_in(dir.path(), &["sweep", "--config", "c.json", "--out", "plots", "--format", "svg-plot"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["residual_vs_delta.svg", "residual_vs_n.svg"] {
        let svg = fs::read_to_string(dir.path().join("plots").join(name)).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline"));
        assert!(!svg.contains("NaN"));
    }
}

#[test]
fn sweep_malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), STEP_CONFIG.replace("\"origin\": 1", "\"origin\": 7")).unwrap();
    fs::write(dir.path().join("typo.json"), STEP_CONFIG.replace("\"schemes\"", "\"schemas\"")).unwrap();
    fs::write(dir.path().join("syntax.json"), "{\n  \"signals\": [\n").unwrap();
    fs::write(dir.path().join("width.json"), STEP_CONFIG.replace(r#"{"kind": "heaviside", "step": 0}"#, r#"{"kind": "gaussian", "amplitude": 1, "center": 0, "width": 0}"#)).unwrap();
    for (file, needle) in [
        ("bad.json", "layers[0]"),
        ("typo.json", "schemas"),
        ("syntax.json", "line"),
        ("width.json", "signals[0]"),
        ("missing.json", "missing.json"),
    ] {
        let out = run_in(dir.path(), &["sweep", "--config", file, "--out", "o.csv"]);
        assert_eq!(out.status.code(), Some(2), "{file}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(needle), "{file}: {err}");
        assert!(!dir.path().join("o.csv").exists(), "{file} left an output file");
    }
}

#[test]
fn sweep_bad_thread_env_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), STEP_CONFIG).unwrap();
    let out = Command::new(BIN)
        .current_dir(dir.path())
        .env("EQUIVPROBE_THREADS", "many")
        .args(["sweep", "--config", "c.json", "--out", "o.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_is_deterministic() {
    let a = run(&["check", "--seed", "11"]);
    let b = run(&["check", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("equivprobe check, seed 11\n"));
    assert!(text.trim_end().ends_with("0 failed"));
}

#[test]
fn check_default_seed_passes() {
    assert_eq!(run(&["check"]).status.code(), Some(0));
}

#[test]
fn check_with_broken_boundary_names_the_property() {
    let out = run(&["check", "--inject-fault", "broken-circular"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("FAIL convnet/circular_shift_equivariance"), "{text}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["check", "--seed", "-3"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
