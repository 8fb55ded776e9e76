//! Fast Marching Square planning over occupancy grids, and a pure-pursuit follower.
//!
//! Pass one marches from every obstacle to get a distance field, which is
//! saturated into a speed map. Pass two marches from the goal through that
//! speed map; descending the resulting arrival time gives a path that keeps
//! away from obstacles.

mod fields;
mod fmm;
mod follow;
mod path;

pub use fields::{arrival_field, distance_field, velocity_map, ArrivalField, DistanceField, VelocityMap};
pub use fmm::{eikonal_update, march};
pub use follow::{follow, FollowConfig};
pub use path::{extract_path, plan, Path, PlannerConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("grid has no free cell")]
    NoFreeSpace,
    #[error("GoalBlocked: goal ({x:.2}, {y:.2}) is not traversable")]
    GoalBlocked { x: f64, y: f64 },
    #[error("StartUnreachable: start ({x:.2}, {y:.2}) has no finite arrival time")]
    StartUnreachable { x: f64, y: f64 },
    #[error("DescentStalled after {iterations} iterations at ({x:.2}, {y:.2})")]
    DescentStalled { iterations: usize, x: f64, y: f64 },
    #[error("invalid planner config: {0}")]
    InvalidConfig(String),
}
