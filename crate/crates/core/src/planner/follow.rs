use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Pose2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FollowConfig {
    pub lookahead: f64,
    pub k_heading: f64,
    pub v_max: f64,
    pub goal_tolerance: f64,
}

impl Default for FollowConfig {
    fn default() -> Self {
        FollowConfig {
            lookahead: 1.0,
            k_heading: 1.5,
            v_max: 0.5,
            goal_tolerance: 0.3,
        }
    }
}

/// Pure pursuit: steer toward the first waypoint at least `lookahead` away,
/// searching forward from the closest waypoint. Returns `(v, omega)`.
pub fn follow(waypoints: &[[f64; 2]], pose: &Pose2, cfg: &FollowConfig) -> (f64, f64) {
    let Some(goal) = waypoints.last() else { return (0.0, 0.0) };
    if pose.distance_to(*goal) <= cfg.goal_tolerance {
        return (0.0, 0.0);
    }
    let closest = waypoints
        .iter()
        .enumerate()
        .min_by(|a, b| pose.distance_to(*a.1).total_cmp(&pose.distance_to(*b.1)))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let target = waypoints[closest..]
        .iter()
        .find(|w| pose.distance_to(**w) >= cfg.lookahead)
        .unwrap_or(goal);
    let bearing = (target[1] - pose.y).atan2(target[0] - pose.x);
    let err = wrap_angle(bearing - pose.heading);
    (cfg.v_max * err.cos().max(0.0), cfg.k_heading * err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_goal_stops() {
        let c = FollowConfig::default();
        assert_eq!(follow(&[[0.0, 0.0], [1.0, 0.0]], &Pose2::new(1.1, 0.0, 0.0), &c), (0.0, 0.0));
    }

    #[test]
    fn straight_ahead() {
        let c = FollowConfig::default();
        let (v, w) = follow(&[[0.0, 0.0], [5.0, 0.0]], &Pose2::new(0.0, 0.0, 0.0), &c);
        assert_eq!((v, w), (c.v_max, 0.0));
    }

    #[test]
    fn behind_rotates_in_place() {
        let c = FollowConfig::default();
        let (v, w) = follow(&[[0.0, 0.0], [-5.0, 0.0]], &Pose2::new(0.0, 0.0, 0.0), &c);
        assert_eq!(v, 0.0);
        assert!(w.abs() > 0.0);
    }
}
