use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use rover_ffi::*;

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn last_error() -> String {
    let p = rover_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_string_lossy().into_owned();
    rover_string_free(s);
    out
}

#[test]
fn plan_on_open_grid() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(rover_grid_new(20, 20, 0.5, 0.0, 0.0, &mut g), RoverStatus::Ok);
        for j in 0..20 {
            for i in 0..20 {
                assert_eq!(rover_grid_set_occupied(g, i, j, false), RoverStatus::Ok);
            }
        }
        let mut json = ptr::null_mut();
        assert_eq!(rover_plan(g, 1.0, 1.0, 8.0, 8.0, &mut json), RoverStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert!(v["length"].as_f64().unwrap() > 9.0);
        rover_grid_free(g);
    }
}

#[test]
fn blocked_goal_reports_error() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(rover_grid_new(10, 10, 1.0, 0.0, 0.0, &mut g), RoverStatus::Ok);
        assert_eq!(rover_grid_set_occupied(g, 7, 7, true), RoverStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(rover_plan(g, 1.5, 1.5, 7.5, 7.5, &mut json), RoverStatus::PlanFailed);
        assert!(json.is_null());
        assert!(last_error().starts_with("GoalBlocked"));
        assert_eq!(rover_grid_set_occupied(g, 10, 0, true), RoverStatus::InvalidArgument);
        rover_grid_free(g);
    }
}

#[test]
fn null_arguments() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(rover_grid_new(0, 10, 1.0, 0.0, 0.0, &mut g), RoverStatus::InvalidArgument);
        assert!(g.is_null());
        assert_eq!(rover_sim_new(ptr::null(), ptr::null(), &mut ptr::null_mut()), RoverStatus::NullPointer);
        let mut running = false;
        assert_eq!(rover_sim_step(ptr::null_mut(), &mut running), RoverStatus::NullPointer);
        rover_sim_free(ptr::null_mut());
        rover_grid_free(ptr::null_mut());
        rover_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_scenario_names_field() {
    let json = CString::new(r#"{"version": 1, "name": "x", "seed": 1, "ticks": 0, "terrain": {"type": "flat", "width": 10, "height": 10, "resolution": 0.5}, "entities": []}"#).unwrap();
    unsafe {
        let mut sim = ptr::null_mut();
        assert_eq!(rover_sim_new(json.as_ptr(), ptr::null(), &mut sim), RoverStatus::ScenarioInvalid);
        assert!(sim.is_null());
        assert!(last_error().contains("ticks"), "{}", last_error());
    }
}

#[test]
fn sim_steps_and_reports() {
    let path = manifest().join("../core/scenarios/scenario1.json");
    let path = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut sim = ptr::null_mut();
        assert_eq!(rover_sim_load(path.as_ptr(), &mut sim), RoverStatus::Ok);
        let mut running = false;
        for _ in 0..20 {
            assert_eq!(rover_sim_step(sim, &mut running), RoverStatus::Ok);
        }
        assert!(running);
        let mut tick = 0;
        assert_eq!(rover_sim_tick(sim, &mut tick), RoverStatus::Ok);
        assert_eq!(tick, 20);
        assert_eq!(rover_sim_run(sim), RoverStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(rover_sim_report_json(sim, &mut json), RoverStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(v["samples_stored"], 1);
        assert_eq!(rover_sim_step(sim, &mut running), RoverStatus::Ok);
        assert!(!running);
        rover_sim_free(sim);
    }
}

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(manifest().join("include/rover_ffi.h")).unwrap();
    for name in [
        "rover_last_error",
        "rover_string_free",
        "rover_sim_new",
        "rover_sim_load",
        "rover_sim_step",
        "rover_sim_run",
        "rover_sim_tick",
        "rover_sim_report_json",
        "rover_sim_free",
        "rover_grid_new",
        "rover_grid_load",
        "rover_grid_set_occupied",
        "rover_plan",
        "rover_grid_free",
        "typedef struct RoverSim RoverSim",
        "ROVER_STATUS_OK = 0",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"rover_ffi.h\"\n\
         int main(void) {\n\
           RoverGrid *g = NULL;\n\
           char *json = NULL;\n\
           if (rover_grid_new(8, 8, 1.0, 0.0, 0.0, &g) != ROVER_STATUS_OK) return 1;\n\
           if (rover_plan(g, 1.5, 1.5, 6.5, 6.5, &json) == ROVER_STATUS_OK) rover_string_free(json);\n\
           rover_grid_free(g);\n\
           return 0;\n\
         }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(manifest().join("include"))
        .arg(&src)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
}
