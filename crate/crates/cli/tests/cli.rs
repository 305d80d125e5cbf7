use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn rdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdc"))
        .args(args)
        .env("RDC_LOG", "error")
        .output()
        .expect("binary runs")
}

fn run_with(experiment: &str, config: &str, format: &str) -> (TempDir, Output) {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let output = rdc(&[
        experiment,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--format",
        format,
    ]);
    (dir, output)
}

fn files(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir.join("out"))
        .map(|rd| rd.map(|e| e.unwrap().path()).collect())
        .unwrap_or_default();
    v.retain(|p| p.extension().is_some_and(|e| e == ext));
    v.sort();
    v
}

fn summary(dir: &Path) -> Value {
    let json = files(dir, "json");
    assert_eq!(json.len(), 1, "{json:?}");
    serde_json::from_str(&fs::read_to_string(&json[0]).unwrap()).unwrap()
}

fn csv(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    (header, lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

#[test]
fn mu_star_on_the_unit_interval() {
    let (dir, out) = run_with("mu-star", r#"{"dim": 1, "measure": 1.0}"#, "csv");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    let r = &s["results"];
    let (lower, upper, numeric) = (
        r["lower"].as_f64().unwrap(),
        r["upper"].as_f64().unwrap(),
        r["numeric"].as_f64().unwrap(),
    );
    assert!((lower - 0.0029297).abs() < 5e-8);
    assert!((upper - 0.0112579).abs() < 5e-8);
    assert!(lower <= numeric && numeric <= upper);
}

#[test]
fn path_csv_and_summary() {
    let (dir, out) = run_with("path", r#"{"radius": 10.0, "dim": 2}"#, "csv");
    assert!(out.status.success());
    let tables = files(dir.path(), "csv");
    assert_eq!(tables.len(), 1);
    let name = tables[0].file_name().unwrap().to_str().unwrap().to_string();
    assert!(name.starts_with("path-") && name.len() == "path-".len() + 12 + ".csv".len(), "{name}");
    let (header, rows) = csv(&tables[0]);
    assert_eq!(header, "a,trace");
    assert_eq!(rows[0], vec!["0", "0"]);
    let last: f64 = rows.last().unwrap()[1].parse().unwrap();
    assert!((last - 1.0 / 3.0).abs() < 1e-10);

    // defaults are echoed back
    let s = summary(dir.path());
    assert_eq!(s["config"]["nr"], 200);
    assert_eq!(s["config"]["nonlinearity"]["kind"], "cubic_bistable");
    assert_eq!(s["status"], "ok");
}

#[test]
fn identical_configs_give_identical_files() {
    let config = r#"{"mu": 0.5, "radius": 4.0}"#;
    let (a, _) = run_with("path", config, "csv");
    let (b, _) = run_with("path", config, "csv");
    let (fa, fb) = (files(a.path(), "csv"), files(b.path(), "csv"));
    assert_eq!(fa[0].file_name(), fb[0].file_name());
    assert_eq!(fs::read(&fa[0]).unwrap(), fs::read(&fb[0]).unwrap());

    let (c, _) = run_with("path", r#"{"mu": 0.5, "radius": 4.5}"#, "csv");
    assert_ne!(files(c.path(), "csv")[0].file_name(), fa[0].file_name());
}

#[test]
fn validation_errors_exit_2_without_output() {
    for config in [r#"{"mu": -1.0}"#, r#"{"muu": 1.0}"#, "not json", r#"{"dim": 7}"#] {
        let (dir, out) = run_with("path", config, "csv");
        assert_eq!(out.status.code(), Some(2), "{config}");
        assert!(!dir.path().join("out").exists(), "{config}");
    }
    // an unclassifiable reaction is also a configuration problem
    let (dir, out) = run_with("path", r#"{"nonlinearity": {"kind": "cubic_bistable", "theta": 0.7}}"#, "csv");
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_experiment_is_rejected() {
    let out = rdc(&["bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3_with_diagnostics() {
    // far above the critical diffusivity there is no barrier to reach
    let (dir, out) = run_with("path-to-barrier", r#"{"mu": 50.0}"#, "csv");
    assert_eq!(out.status.code(), Some(3));
    let json = files(dir.path(), "json");
    assert_eq!(json.len(), 1);
    assert!(json[0].to_str().unwrap().ends_with("-error.json"));
    let d: Value = serde_json::from_str(&fs::read_to_string(&json[0]).unwrap()).unwrap();
    assert_eq!(d["status"], "numerical_failure");
    assert_eq!(d["config"]["mu"], 50.0);
    assert!(files(dir.path(), "csv").is_empty());
}

#[test]
fn wave_profile_csv_and_svg() {
    let (dir, out) = run_with("wave", "{}", "csv");
    assert!(out.status.success());
    let (header, rows) = csv(&files(dir.path(), "csv")[0]);
    assert_eq!(header, "xi,U");
    assert!(rows.len() > 100);
    let speed = summary(dir.path())["results"]["speed"].as_f64().unwrap();
    assert!((speed - 2f64.sqrt() / 6.0).abs() < 1e-6);

    let (dir, out) = run_with("wave", r#"{"nonlinearity": {"kind": "cubic_bistable", "theta": 0.5}}"#, "svg");
    assert!(out.status.success());
    let svg = files(dir.path(), "svg");
    assert_eq!(svg.len(), 1);
    let text = fs::read_to_string(&svg[0]).unwrap();
    assert!(text.starts_with("<svg") && text.contains("<polyline"));
    assert!(files(dir.path(), "csv").is_empty());
    assert_eq!(summary(dir.path())["results"]["stationary"], true);
}

#[test]
fn simulate_and_omega() {
    let (dir, out) = run_with("simulate", r#"{"radius": 3.0, "nr": 60, "boundary": 1.0, "horizon": 5.0}"#, "csv");
    assert!(out.status.success());
    let (header, rows) = csv(&files(dir.path(), "csv")[0]);
    assert_eq!(header, "t,r,u");
    assert_eq!(rows[0][0], "0");
    assert!(rows.iter().all(|r| {
        let u: f64 = r[2].parse().unwrap();
        (0.0..=1.0).contains(&u)
    }));

    let (dir, out) = run_with("omega", r#"{"radius": 3.0, "nr": 60, "initial": 1.0}"#, "csv");
    assert!(out.status.success());
    assert_eq!(summary(dir.path())["results"]["omega_limit"]["limit"], "zero");
}

#[test]
fn barrier_profiles() {
    let (dir, out) = run_with("barrier", r#"{"mu": 0.1}"#, "csv");
    assert!(out.status.success());
    let (header, rows) = csv(&files(dir.path(), "csv")[0]);
    assert_eq!(header, "a,r,u,v");
    assert!(!rows.is_empty());
    let s = summary(dir.path());
    assert!(s["results"]["count"].as_u64().unwrap() >= 1);
}

#[test]
fn control_experiments_on_a_small_ball() {
    let small = r#"{"radius": 3.0, "nr": 60}"#;
    let (dir, out) = run_with("staircase", small, "csv");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, _) = csv(&files(dir.path(), "csv")[0]);
    assert_eq!(header, "t,a");
    assert!(summary(dir.path())["results"]["terminal_distance"].as_f64().unwrap() <= 0.01);

    let (dir, out) = run_with("quasistatic", small, "csv");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(summary(dir.path())["results"]["converged"], true);
}

#[test]
fn min_time_writes_schedule_and_probe_log() {
    let config = r#"{"mu": 0.0611, "measure": 1.0, "nr": 50, "dt": 0.01, "t_hi": 1.0}"#;
    let (dir, out) = run_with("min-time", config, "csv");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let tables = files(dir.path(), "csv");
    assert_eq!(tables.len(), 2);
    let probes = tables.iter().find(|p| p.to_str().unwrap().ends_with("-probes.csv")).unwrap();
    let schedule = tables.iter().find(|p| !p.to_str().unwrap().ends_with("-probes.csv")).unwrap();
    assert_eq!(csv(schedule).0, "t,a");
    let (header, rows) = csv(probes);
    assert_eq!(header, "T,feasible,terminal_error");
    assert!(rows.iter().all(|r| r[1] == "true" || r[1] == "false"));
    let r = &summary(dir.path())["results"];
    assert_eq!(r["probes_monotone"], true);
    assert!(r["t_min"].as_f64().unwrap() <= 1.0);
}
