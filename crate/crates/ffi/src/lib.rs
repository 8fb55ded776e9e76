//! C interface to the rover simulator and planner.
//!
//! Every function returns a [`RoverStatus`]; on failure the message is
//! available from [`rover_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Strings
//! returned through out-pointers are owned by the caller and released with
//! [`rover_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rover_core::harness::{Scenario, Sim};
use rover_core::navmap::{load_grid, GridGeometry, OccupancyGrid};
use rover_core::planner::{plan, PlannerConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoverStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ScenarioInvalid = 4,
    PlanFailed = 5,
    Io = 6,
    Simulation = 7,
    Panic = 8,
}

/// A running scenario.
pub struct RoverSim {
    sim: Sim,
}

/// An occupancy grid for planning.
pub struct RoverGrid {
    grid: OccupancyGrid,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(RoverStatus, String);

fn fail(status: RoverStatus, msg: impl std::fmt::Display) -> Fail {
    Fail(status, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RoverStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RoverStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside rover-ffi");
            RoverStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(RoverStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RoverStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| fail(RoverStatus::NullPointer, format!("`{name}` is null")))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no NUL").into_raw()
}

/// Message of the last failed call on this thread, or NULL. Valid until
/// the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn rover_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rover_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a simulation from scenario JSON. Relative paths in the scenario
/// resolve against `base_dir`, which may be NULL.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rover_sim_new(
    scenario_json: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut RoverSim,
) -> RoverStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let text = str_arg(scenario_json, "scenario_json")?;
        let mut s = Scenario::from_json(text).map_err(|e| fail(RoverStatus::ScenarioInvalid, e))?;
        if !base_dir.is_null() {
            s.base_dir = Some(Path::new(str_arg(base_dir, "base_dir")?).to_path_buf());
        }
        let sim = Sim::new(&s).map_err(|e| fail(RoverStatus::ScenarioInvalid, e))?;
        *out = Box::into_raw(Box::new(RoverSim { sim }));
        Ok(())
    })
}

/// Loads a scenario file and builds a simulation.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rover_sim_load(path: *const c_char, out: *mut *mut RoverSim) -> RoverStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let path = str_arg(path, "path")?;
        let s = Scenario::load(Path::new(path)).map_err(|e| fail(RoverStatus::ScenarioInvalid, e))?;
        let sim = Sim::new(&s).map_err(|e| fail(RoverStatus::ScenarioInvalid, e))?;
        *out = Box::into_raw(Box::new(RoverSim { sim }));
        Ok(())
    })
}

/// Advances one tick. `running` receives false once the run has ended.
///
/// # Safety
/// `sim` must be a live handle; `running` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rover_sim_step(sim: *mut RoverSim, running: *mut bool) -> RoverStatus {
    guard(|| {
        let sim = out_arg(sim, "sim")?;
        let running = out_arg(running, "running")?;
        *running = sim.sim.step().map_err(|e| fail(RoverStatus::Simulation, e))?;
        Ok(())
    })
}

/// Steps until the run ends.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rover_sim_run(sim: *mut RoverSim) -> RoverStatus {
    guard(|| {
        let sim = out_arg(sim, "sim")?;
        while sim.sim.step().map_err(|e| fail(RoverStatus::Simulation, e))? {}
        Ok(())
    })
}

/// Current tick.
///
/// # Safety
/// `sim` must be a live handle; `tick` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rover_sim_tick(sim: *const RoverSim, tick: *mut u64) -> RoverStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| fail(RoverStatus::NullPointer, "`sim` is null"))?;
        *out_arg(tick, "tick")? = sim.sim.tick;
        Ok(())
    })
}

/// Mission report over the trace so far, as JSON.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rover_sim_report_json(sim: *const RoverSim, out: *mut *mut c_char) -> RoverStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let sim = sim.as_ref().ok_or_else(|| fail(RoverStatus::NullPointer, "`sim` is null"))?;
        let report = sim.sim.report().map_err(|e| fail(RoverStatus::Simulation, e))?;
        *out = owned_string(serde_json::to_string(&report).expect("report serialises"));
        Ok(())
    })
}

/// Releases a simulation. NULL is ignored.
///
/// # Safety
/// `sim` must come from `rover_sim_new`/`rover_sim_load` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rover_sim_free(sim: *mut RoverSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Creates an all-unknown grid of `width` x `height` cells.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rover_grid_new(
    width: usize,
    height: usize,
    resolution: f64,
    origin_x: f64,
    origin_y: f64,
    out: *mut *mut RoverGrid,
) -> RoverStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let ok = width > 0 && height > 0 && resolution.is_finite() && resolution > 0.0;
        if !ok || !origin_x.is_finite() || !origin_y.is_finite() {
            return Err(fail(RoverStatus::InvalidArgument, "grid needs positive size and resolution"));
        }
        let geometry = GridGeometry::new(width, height, resolution, [origin_x, origin_y]);
        *out = Box::into_raw(Box::new(RoverGrid {
            grid: OccupancyGrid::new(geometry, "map"),
        }));
        Ok(())
    })
}

/// Loads a grid PGM with its JSON sidecar.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rover_grid_load(path: *const c_char, out: *mut *mut RoverGrid) -> RoverStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let path = str_arg(path, "path")?;
        let grid = load_grid(Path::new(path)).map_err(|e| fail(RoverStatus::Io, e))?;
        *out = Box::into_raw(Box::new(RoverGrid { grid }));
        Ok(())
    })
}

/// Marks cell (i, j) occupied or free at full confidence.
///
/// # Safety
/// `grid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rover_grid_set_occupied(grid: *mut RoverGrid, i: usize, j: usize, occupied: bool) -> RoverStatus {
    guard(|| {
        let g = &mut out_arg(grid, "grid")?.grid;
        if i >= g.width() || j >= g.height() {
            return Err(fail(RoverStatus::InvalidArgument, format!("cell ({i}, {j}) outside grid")));
        }
        let l = if occupied { g.clamp[1] } else { g.clamp[0] };
        g.set(i, j, l);
        Ok(())
    })
}

/// Plans from start to goal with default planner settings. `out_json`
/// receives `{"length", "min_clearance", "waypoints"}`.
///
/// # Safety
/// `grid` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rover_plan(
    grid: *const RoverGrid,
    start_x: f64,
    start_y: f64,
    goal_x: f64,
    goal_y: f64,
    out_json: *mut *mut c_char,
) -> RoverStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        *out = std::ptr::null_mut();
        let g = &grid.as_ref().ok_or_else(|| fail(RoverStatus::NullPointer, "`grid` is null"))?.grid;
        let p = plan(g, [start_x, start_y], [goal_x, goal_y], &PlannerConfig::default())
            .map_err(|e| fail(RoverStatus::PlanFailed, e))?;
        let v = serde_json::json!({
            "length": p.length,
            "min_clearance": p.min_clearance,
            "waypoints": p.waypoints,
        });
        *out = owned_string(v.to_string());
        Ok(())
    })
}

/// Releases a grid. NULL is ignored.
///
/// # Safety
/// `grid` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rover_grid_free(grid: *mut RoverGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}
