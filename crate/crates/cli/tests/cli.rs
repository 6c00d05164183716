use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use xiboot_core::seed::rng_from_seed;
use xiboot_core::simulation::RunRecord;
use xiboot_core::{generate_sample, ModelSpec};

fn xiboot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xiboot"))
        .args(args)
        .env_remove("XIBOOT_THREADS")
        .output()
        .expect("spawn xiboot")
}

fn json_ok(args: &[&str]) -> Value {
    let out = xiboot(args);
    assert!(
        out.status.success(),
        "xiboot {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn monotone_rows(n: usize) -> String {
    (1..=n).map(|i| format!("{i},{}\n", 2 * i)).collect()
}

fn gaussian_csv(n: usize, rho: f64, seed: u64) -> String {
    let s = generate_sample(&ModelSpec::Gaussian { rho }, n, &mut rng_from_seed(seed)).unwrap();
    s.pairs().map(|(x, y)| format!("{x},{y}\n")).collect()
}

#[test]
fn xi_monotone_rows() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "m.csv", &format!("x,y\n{}", monotone_rows(100)));
    let v = json_ok(&["xi", path.to_str().unwrap()]);
    let xi = v["xi"].as_f64().unwrap();
    assert!((xi - 0.970297).abs() < 1e-6, "{xi}");
    assert_eq!(xi, 1.0 - 3.0 / 101.0);
    assert_eq!(v["n"], 100);
    assert_eq!(v["x_ties"], 0);
    assert_eq!(v["y_ties"], 0);
    assert_eq!(v["formula"], "no-ties");
    assert_eq!(v["manifest"]["command"], "xi");
    assert_eq!(v["manifest"]["input_digest"].as_str().unwrap().len(), 16);
}

#[test]
fn header_is_optional() {
    let dir = TempDir::new().unwrap();
    let body = gaussian_csv(50, 0.3, 1);
    let with = write(dir.path(), "h.csv", &format!("x,y\n{body}"));
    let without = write(dir.path(), "n.csv", &body);
    let crlf = write(dir.path(), "c.csv", &body.replace('\n', "\r\n"));
    let a = json_ok(&["xi", with.to_str().unwrap()]);
    let b = json_ok(&["xi", without.to_str().unwrap()]);
    let c = json_ok(&["xi", crlf.to_str().unwrap()]);
    assert_eq!(a["xi"], b["xi"]);
    assert_eq!(a["xi"], c["xi"]);
}

#[test]
fn ties_are_reported() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "t.csv", "1,5\n2,5\n3,7\n4,7\n");
    let v = json_ok(&["xi", path.to_str().unwrap()]);
    assert_eq!(v["xi"].as_f64().unwrap(), 0.5);
    assert_eq!(v["y_ties"], 2);
    assert_eq!(v["formula"], "ties");
}

#[test]
fn malformed_row_reports_line() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "bad.csv", "x,y\n1,2\n3,oops\n4,5\n");
    let out = xiboot(&["xi", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");

    let path = write(dir.path(), "short.csv", "1,2\n3\n");
    let out = xiboot(&["xi", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn constant_y_exits_2() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "c.csv", "1,3\n2,3\n3,3\n");
    assert_eq!(xiboot(&["xi", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(xiboot(&["bootstrap", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(xiboot(&["xi"]).status.code(), Some(1));
    assert_eq!(xiboot(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(xiboot(&["xi", "/nonexistent/file.csv"]).status.code(), Some(1));
    assert_eq!(xiboot(&["--help"]).status.code(), Some(0));
    assert_eq!(xiboot(&["--version"]).status.code(), Some(0));
}

#[test]
fn fixed_rule_echoes_m() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "g.csv", &gaussian_csv(100, 0.5, 2));
    let v = json_ok(&[
        "bootstrap",
        path.to_str().unwrap(),
        "--rule",
        "fixed",
        "--gamma",
        "0.5",
        "--B",
        "200",
    ]);
    assert_eq!(v["chosen_m"], 10);
    assert_eq!(v["candidate_ms"], serde_json::json!([10]));
    let ci = v["ci"].as_array().unwrap();
    let (lo, hi) = (ci[0].as_f64().unwrap(), ci[1].as_f64().unwrap());
    let xi_n = v["xi_n"].as_f64().unwrap();
    assert!(lo < xi_n && xi_n < hi);
    assert!(((lo + hi) / 2.0 - xi_n).abs() < 1e-12);
}

#[test]
fn bickel_sakov_trace_is_consecutive() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "g.csv", &gaussian_csv(100, 0.5, 3));
    let v = json_ok(&["bootstrap", path.to_str().unwrap(), "--rule", "bickel-sakov", "--B", "100"]);
    assert_eq!(v["candidate_ms"], serde_json::json!([99, 50, 25, 13, 7, 4]));
    let matrix = v["distance_matrix"].as_array().unwrap();
    assert!(matrix[0][1].is_number());
    assert!(matrix[0][2].is_null());
}

#[test]
fn cluster_bootstrap_near_table_value() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "g.csv", &gaussian_csv(1000, 0.5, 4));
    let v = json_ok(&["bootstrap", path.to_str().unwrap()]);
    let s = v["sigma_star_sq"].as_f64().unwrap();
    assert!((s - 0.51).abs() <= 0.15, "{s}");
    assert_eq!(v["candidate_ms"].as_array().unwrap().len(), 11);
}

fn calibrate(dir: &Path, name: &str, model: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["calibrate"];
    args.extend_from_slice(model);
    args.extend_from_slice(&["--n-cal", "500", "--M-cal", "200", "--out", path.to_str().unwrap()]);
    json_ok(&args);
    path
}

fn read_runs(path: &Path) -> Vec<RunRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

#[test]
fn single_run_study() {
    let dir = TempDir::new().unwrap();
    let truth = calibrate(dir.path(), "truth.json", &["--model", "gaussian", "--rho", "0.5"]);
    let out = dir.path().join("study");
    let report = json_ok(&[
        "study", "--model", "gaussian", "--rho", "0.5", "--n", "200", "--M", "1", "--B", "100",
        "--truth", truth.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    let runs = read_runs(&out.join("runs.csv"));
    assert_eq!(runs.len(), 1);
    let sigma_hat = report["truth_sigma_sq"].as_f64().unwrap();
    assert_eq!(report["rmse"].as_f64().unwrap(), (runs[0].sigma_star_sq - sigma_hat).abs());
    let on_disk: Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(on_disk, report);
}

#[test]
fn study_aggregates_recompute_from_csv() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("study");
    let report = json_ok(&[
        "study", "--model", "poisson", "--rho", "0.5", "--n", "100", "--M", "12", "--B", "60",
        "--calibrate", "--n-cal", "300", "--M-cal", "100", "--out", out.to_str().unwrap(),
    ]);
    let header = fs::read_to_string(out.join("runs.csv")).unwrap();
    assert!(header.starts_with("run,xi_n,chosen_m,sigma_star_sq,ci_low,ci_high,covered\n"));
    let runs = read_runs(&out.join("runs.csv"));
    assert_eq!(runs.len() + report["failures"].as_array().unwrap().len(), 12);
    let sigma_hat = report["truth_sigma_sq"].as_f64().unwrap();
    let xi_hat = report["truth_xi"].as_f64().unwrap();
    let k = runs.len() as f64;
    let rmse = (runs.iter().map(|r| (r.sigma_star_sq - sigma_hat).powi(2)).sum::<f64>() / k).sqrt();
    assert_eq!(report["rmse"].as_f64().unwrap(), rmse);
    assert_eq!(report["rrmse"].as_f64().unwrap(), rmse / sigma_hat);
    for r in &runs {
        assert_eq!(r.covered, r.ci_low <= xi_hat && xi_hat <= r.ci_high);
    }
    let coverage = runs.iter().filter(|r| r.covered).count() as f64 / k;
    assert_eq!(report["coverage"].as_f64().unwrap(), coverage);
}

#[test]
fn study_model_mismatch_exits_4() {
    let dir = TempDir::new().unwrap();
    let truth = calibrate(dir.path(), "truth.json", &["--model", "gaussian", "--rho", "0.5"]);
    let out = xiboot(&[
        "study", "--model", "gaussian", "--rho", "0.3", "--n", "100", "--M", "2", "--B", "50",
        "--truth", truth.to_str().unwrap(), "--out", dir.path().join("s").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn study_needs_truth_or_calibrate() {
    let dir = TempDir::new().unwrap();
    let out = xiboot(&["study", "--model", "gaussian", "--n", "100", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_records_round_trip_through_csv() {
    use rand::Rng;
    let mut rng = rng_from_seed(9);
    let records: Vec<RunRecord> = (0..500)
        .map(|run| RunRecord {
            run,
            xi_n: rng.random::<f64>() * 2.0 - 1.0,
            chosen_m: rng.random_range(2..10_000),
            sigma_star_sq: f64::from_bits(rng.random_range(0x3F00_0000_0000_0000..0x4010_0000_0000_0000)),
            ci_low: -rng.random::<f64>() * 1e-7,
            ci_high: rng.random::<f64>() * 1e300,
            covered: rng.random(),
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &records {
        w.serialize(r).unwrap();
    }
    let bytes = w.into_inner().unwrap();
    let back: Vec<RunRecord> = csv::Reader::from_reader(bytes.as_slice())
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(back, records);
}

#[test]
fn threads_env_fallback() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "m.csv", &monotone_rows(20));
    let out = Command::new(env!("CARGO_BIN_EXE_xiboot"))
        .args(["xi", path.to_str().unwrap()])
        .env("XIBOOT_THREADS", "3")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["manifest"]["threads"], 3);
}
