use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;
use std::process::{Command, Output};

use riemcubic::trajectory::Table;
use serde_json::Value;

fn rcubic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcubic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn geodesic_trajectory_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let out = rcubic(&[
        "nhp", "--J", "0,0,1", "--J1", "0", "--J2", "0", "--t-final", "1", "--dt", "0.001", "--out", path_str(&path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1002);
    assert!(text.starts_with("t,J1,J2,J3,"));
    let table = Table::from_csv(&text).unwrap();
    let last = table.rows.last().unwrap();
    let g11 = table.column("g11").unwrap();
    let g21 = table.column("g21").unwrap();
    assert!((last[0] - 1.0).abs() < 1e-12);
    assert!((last[g11] - 1f64.cos()).abs() < 1e-12);
    assert!((last[g21] - 1f64.sin()).abs() < 1e-12);
}

#[test]
fn two_sample_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.csv");
    let out = rcubic(&["cubic-sphere", "--x", "0,0,1", "--v", "1,0,0", "--t-final", "0.1", "--dt", "0.1", "--out", path_str(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(Table::from_csv(&text).unwrap().to_csv(), text);
}

#[test]
fn json_row_count_matches_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.json");
    let out = rcubic(&[
        "ep2", "--xi", "1,0,0", "--metric", "1,0,0,2,0,3", "--t-final", "0.7", "--dt", "0.1", "--format", "json",
        "--out", path_str(&path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["flavor"], "ep2");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 8);
    assert_eq!(doc["dt"], 0.1);
    assert_eq!(doc["columns"][0], "t");
}

#[test]
fn ballistic_circle_radius() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("circle.csv");
    let out = rcubic(&[
        "ballistic", "--x", "1,0,0", "--v", "0,1,0", "--equal-norm", "+", "--t-final", "6.3", "--out", path_str(&path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_eq!(rep["classification"], "equal-norm-circle");
    assert!((rep["radius"].as_f64().unwrap() - FRAC_1_SQRT_2).abs() < 1e-12);
    let table = Table::from_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let cols: Vec<usize> = ["x1", "x2", "x3"].iter().map(|c| table.column(c).unwrap()).collect();
    let axis: Vec<f64> = rep["axis"].as_array().unwrap().iter().map(|a| a.as_f64().unwrap()).collect();
    for row in &table.rows {
        let x: Vec<f64> = cols.iter().map(|&c| row[c]).collect();
        let along: f64 = x.iter().zip(&axis).map(|(a, b)| a * b).sum();
        let r = (1.0 - along * along).sqrt();
        assert!((r - FRAC_1_SQRT_2).abs() < 1e-7, "radius {r}");
    }
}

#[test]
fn geodesic_plan_converges() {
    let out = rcubic(&[
        "plan", "--space", "sphere", "--from", "0,0,1", "--v-from", "1.5708,0,0", "--to", "1,0,0", "--v-to", "0,0,-1.5708",
        "--T", "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&out);
    assert_eq!(rep["converged"], true);
    assert!(rep["terminal_error"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn waypoint_plan_writes_all_segments() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.csv");
    let out = rcubic(&[
        "plan", "--waypoint", "0,0,1:1,0,0", "--waypoint", "1,0,0:0,1,0", "--waypoint", "0,1,0:0,0,1",
        "--durations", "1,0.5", "--out", path_str(&path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_eq!(rep["segments"].as_array().unwrap().len(), 2);
    let table = Table::from_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((table.rows.last().unwrap()[0] - 1.5).abs() < 1e-12);
}

#[test]
fn certify_reports_verdicts() {
    let liftable = report(&rcubic(&[
        "certify", "--liftable", "--q0", "0,0,1", "--d", "0,1,0", "--a", "1", "--b", "0.5", "--c", "0.2", "--dt", "0.01",
    ]));
    assert_eq!(liftable["certificate"]["verdict"], true);
    let generic = report(&rcubic(&["certify", "--x", "0,0,1", "--v", "0,1,0", "--J1", "0,1,0", "--dt", "0.01"]));
    assert_eq!(generic["certificate"]["verdict"], false);
    assert_eq!(generic["lift_obstruction"], 1.0);
}

#[test]
fn curvature_values() {
    let group = report(&rcubic(&["curvature", "--space", "group", "--xi", "1,0,0", "--eta", "0,1,0"]));
    assert!((group["sectional"].as_f64().unwrap() - 0.25).abs() < 1e-15);
    let sphere = report(&rcubic(&["curvature", "--space", "sphere", "--xi", "1,0,0", "--eta", "0,1,0"]));
    assert!((sphere["sectional"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    let out = rcubic(&["curvature", "--space", "sphere", "--xi", "0,0,1", "--eta", "0,1,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(rcubic(&["nhp", "--J", "0,0,1", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(rcubic(&["nhp", "--J", "0,0"]).status.code(), Some(2));
    assert_eq!(rcubic(&["nhp", "--J", "0,0,1", "--dt", "-1"]).status.code(), Some(2));
    assert_eq!(rcubic(&["lift", "--x", "0,0,1", "--v", "0,0,1"]).status.code(), Some(2));
    let missing = dir.path().join("nope").join("x.csv");
    assert_eq!(rcubic(&["nhp", "--J", "0,0,1", "--out", path_str(&missing)]).status.code(), Some(2));
    assert_eq!(rcubic(&["nhp", "--J", "0,0,1", "--out", path_str(dir.path())]).status.code(), Some(2));
    let stuck = rcubic(&[
        "plan", "--from", "0,0,1", "--v-from", "1,0,0", "--to", "0,1,0", "--v-to", "0,0,-1", "--max-iter", "1",
    ]);
    assert_eq!(stuck.status.code(), Some(3));
    let blowup = rcubic(&["nhp", "--J", "1e200,0,0", "--J1", "0,1e200,0", "--J2", "0,0,1e200", "--dt", "0.1"]);
    assert_eq!(blowup.status.code(), Some(4));
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"x": [0, 0, 1], "v": [1, 0, 0], "J1": "0,1,0", "t-final": 0.5, "dt": 0.01}"#).unwrap();
    let a = rcubic(&["cubic-sphere", "--config", path_str(&cfg)]);
    let b = rcubic(&["cubic-sphere", "--x", "0,0,1", "--v", "1,0,0", "--J1", "0,1,0", "--t-final", "0.5", "--dt", "0.01"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = rcubic(&["cubic-sphere", "--config", path_str(&cfg), "--t-final", "0.25"]);
    assert_eq!(report(&c)["t_final"], 0.25);
}

fn final_state(args: &[&str], dt: f64) -> Vec<f64> {
    let dt = dt.to_string();
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--dt", &dt]);
    let rep = report(&rcubic(&full));
    let state = rep["final_state"].as_object().expect("final state");
    state.values().map(|v| v.as_f64().unwrap()).collect()
}

#[test]
fn flows_converge_at_fourth_order() {
    let cases: [&[&str]; 7] = [
        &["nhp", "--J", "0.3,-0.2,0.9", "--J1", "1,0,0.2", "--J2", "0,0.5,0", "--t-final", "2"],
        &["ep2", "--xi", "0.3,-0.2,0.9", "--xi-dot", "1,0,0.2", "--metric", "1,0.1,0,2,0,3", "--t-final", "2"],
        &["cubic-sphere", "--x", "0,0,1", "--v", "1,0,0", "--J1", "0,1,0", "--J2", "0.3,0.2,0", "--t-final", "2"],
        &["ballistic", "--x", "1,0,0", "--v", "0,1,0", "--sigma", "2", "--t-final", "2"],
        &["lift", "--x", "0,0,1", "--v", "1,0,0", "--J1", "0,1,0", "--J2", "0.3,0.2,0", "--t-final", "2"],
        &["certify", "--x", "0,0,1", "--v", "1,0,0", "--J1", "0,1,0", "--t-final", "2"],
        &["lp-check", "--J", "0.5,0,0.8", "--J1", "0,0.3,0", "--J2", "0.1,0,0", "--t-final", "2"],
    ];
    for args in cases {
        let s: Vec<Vec<f64>> = [0.1, 0.05, 0.025].iter().map(|&h| final_state(args, h)).collect();
        let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let (e1, e2) = (diff(&s[0], &s[1]), diff(&s[1], &s[2]));
        let order = (e1 / e2).log2();
        assert!(order > 3.5, "{}: order {order}", args[0]);
    }
}
