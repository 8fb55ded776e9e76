use std::path::PathBuf;
use std::process::Command;

use rover_core::navmap::{save_grid, GridGeometry, OccupancyGrid};

fn rover() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rover"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn grid_file(dir: &std::path::Path) -> PathBuf {
    let mut g = OccupancyGrid::new(GridGeometry::new(40, 40, 0.1, [0.0, 0.0]), "map");
    for j in 15..25 {
        for i in 15..25 {
            g.set(i, j, 5.0);
        }
    }
    let path = dir.join("map.pgm");
    save_grid(&g, &path).unwrap();
    path
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = rover().arg("fly").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plan_into_an_obstacle_fails_with_its_kind() {
    let dir = tempfile::tempdir().unwrap();
    let grid = grid_file(dir.path());
    let out = rover()
        .args(["plan", grid.to_str().unwrap(), "--start", "0.5,0.5", "--goal", "2.0,2.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("GoalBlocked"));
}

#[test]
fn plan_prints_a_path_and_draws_it() {
    let dir = tempfile::tempdir().unwrap();
    let grid = grid_file(dir.path());
    let img = dir.path().join("path.ppm");
    let out = rover()
        .args(["plan", grid.to_str().unwrap(), "--start", "0.5,0.5", "--goal", "3.5,3.5", "--out"])
        .arg(&img)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["length"].as_f64().unwrap() > 4.2);
    assert!(v["waypoints"].as_array().unwrap().len() > 2);
    assert!(std::fs::read(&img).unwrap().starts_with(b"P6"));
}

#[test]
fn run_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = rover()
        .arg("run")
        .arg(fixture("liveness.json"))
        .args(["--seed", "3", "--reset-at", "4000", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["goal_status"].as_object().unwrap().values().all(|s| s == "done" || s == "failed"));
    let saved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(saved["goal_status"], report["goal_status"]);

    let replay = rover().arg("track-replay").arg(dir.path().join("trace.jsonl")).output().unwrap();
    assert!(replay.status.success());
    assert!(!replay.stdout.is_empty());
}

#[test]
fn invalid_scenario_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("liveness.json")).unwrap()).unwrap();
    v["bus"]["drop_probability"] = serde_json::json!(1.5);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let out = rover().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bus.drop_probability"));
}
