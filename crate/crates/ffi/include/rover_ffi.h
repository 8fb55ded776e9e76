#ifndef ROVER_FFI_H
#define ROVER_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RoverStatus {
  ROVER_STATUS_OK = 0,
  ROVER_STATUS_NULL_POINTER = 1,
  ROVER_STATUS_INVALID_UTF8 = 2,
  ROVER_STATUS_INVALID_ARGUMENT = 3,
  ROVER_STATUS_SCENARIO_INVALID = 4,
  ROVER_STATUS_PLAN_FAILED = 5,
  ROVER_STATUS_IO = 6,
  ROVER_STATUS_SIMULATION = 7,
  ROVER_STATUS_PANIC = 8,
} RoverStatus;

/**
 * An occupancy grid for planning.
 */
typedef struct RoverGrid RoverGrid;

/**
 * A running scenario.
 */
typedef struct RoverSim RoverSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until
 * the next call into the library on this thread.
 */
const char *rover_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void rover_string_free(char *s);

/**
 * Builds a simulation from scenario JSON. Relative paths in the scenario
 * resolve against `base_dir`, which may be NULL.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum RoverStatus rover_sim_new(const char *scenario_json,
                               const char *base_dir,
                               struct RoverSim **out);

/**
 * Loads a scenario file and builds a simulation.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum RoverStatus rover_sim_load(const char *path, struct RoverSim **out);

/**
 * Advances one tick. `running` receives false once the run has ended.
 *
 * # Safety
 * `sim` must be a live handle; `running` must be writable.
 */
enum RoverStatus rover_sim_step(struct RoverSim *sim, bool *running);

/**
 * Steps until the run ends.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum RoverStatus rover_sim_run(struct RoverSim *sim);

/**
 * Current tick.
 *
 * # Safety
 * `sim` must be a live handle; `tick` must be writable.
 */
enum RoverStatus rover_sim_tick(const struct RoverSim *sim, uint64_t *tick);

/**
 * Mission report over the trace so far, as JSON.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum RoverStatus rover_sim_report_json(const struct RoverSim *sim, char **out);

/**
 * Releases a simulation. NULL is ignored.
 *
 * # Safety
 * `sim` must come from `rover_sim_new`/`rover_sim_load` and not have been freed.
 */
void rover_sim_free(struct RoverSim *sim);

/**
 * Creates an all-unknown grid of `width` x `height` cells.
 *
 * # Safety
 * `out` must be writable.
 */
enum RoverStatus rover_grid_new(size_t width,
                                size_t height,
                                double resolution,
                                double origin_x,
                                double origin_y,
                                struct RoverGrid **out);

/**
 * Loads a grid PGM with its JSON sidecar.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum RoverStatus rover_grid_load(const char *path, struct RoverGrid **out);

/**
 * Marks cell (i, j) occupied or free at full confidence.
 *
 * # Safety
 * `grid` must be a live handle.
 */
enum RoverStatus rover_grid_set_occupied(struct RoverGrid *grid, size_t i, size_t j, bool occupied);

/**
 * Plans from start to goal with default planner settings. `out_json`
 * receives `{"length", "min_clearance", "waypoints"}`.
 *
 * # Safety
 * `grid` must be a live handle; `out_json` must be writable.
 */
enum RoverStatus rover_plan(const struct RoverGrid *grid,
                            double start_x,
                            double start_y,
                            double goal_x,
                            double goal_y,
                            char **out_json);

/**
 * Releases a grid. NULL is ignored.
 *
 * # Safety
 * `grid` must come from this library and not have been freed.
 */
void rover_grid_free(struct RoverGrid *grid);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROVER_FFI_H */
