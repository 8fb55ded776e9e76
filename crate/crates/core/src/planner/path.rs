use serde::{Deserialize, Serialize};

use crate::navmap::OccupancyGrid;

use super::{arrival_field, distance_field, velocity_map, ArrivalField, DistanceField, PlanError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub p_occ: f64,
    /// Obstacle distance (m) at which speed saturates.
    pub d_sat: f64,
    pub alpha: f64,
    pub w_floor: f64,
    /// Descent step as a fraction of the cell size.
    pub step_fraction: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            p_occ: 0.65,
            d_sat: 1.0,
            alpha: 1.0,
            w_floor: 1e-3,
            step_fraction: 0.5,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        let ok = self.d_sat > 0.0
            && self.alpha > 0.0
            && self.w_floor > 0.0
            && self.step_fraction > 0.0
            && self.step_fraction <= 1.0
            && (0.0..=1.0).contains(&self.p_occ);
        if ok {
            Ok(())
        } else {
            Err(PlanError::InvalidConfig(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub waypoints: Vec<[f64; 2]>,
    pub length: f64,
    /// Smallest obstacle distance over the waypoints (infinite on an empty map).
    pub min_clearance: f64,
    /// Interpolated arrival time at each waypoint.
    pub arrival: Vec<f64>,
}

impl Path {
    fn from_waypoints(waypoints: Vec<[f64; 2]>, arrival: Vec<f64>) -> Self {
        let length = waypoints
            .windows(2)
            .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
            .sum();
        Path {
            waypoints,
            length,
            min_clearance: f64::INFINITY,
            arrival,
        }
    }
}

impl ArrivalField {
    /// Bilinear interpolation between cell centres. Unreachable corners are
    /// replaced by a steep finite value so the gradient points away from them.
    pub fn interpolate(&self, p: [f64; 2]) -> f64 {
        let g = &self.geometry;
        let res = g.resolution;
        let gx = (p[0] - g.origin[0]) / res - 0.5;
        let gy = (p[1] - g.origin[1]) / res - 0.5;
        let i0 = (gx.floor() as i64).clamp(0, g.width.saturating_sub(2) as i64) as usize;
        let j0 = (gy.floor() as i64).clamp(0, g.height.saturating_sub(2) as i64) as usize;
        let i1 = (i0 + 1).min(g.width - 1);
        let j1 = (j0 + 1).min(g.height - 1);
        let fx = (gx - i0 as f64).clamp(0.0, 1.0);
        let fy = (gy - j0 as f64).clamp(0.0, 1.0);
        let corners = [
            self.t[g.index(i0, j0)],
            self.t[g.index(i1, j0)],
            self.t[g.index(i0, j1)],
            self.t[g.index(i1, j1)],
        ];
        let max_finite = corners.iter().copied().filter(|t| t.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        if max_finite == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        let fill = max_finite + res / self.w_floor;
        let c: Vec<f64> = corners.iter().map(|t| if t.is_finite() { *t } else { fill }).collect();
        let a = c[0] * (1.0 - fx) + c[1] * fx;
        let b = c[2] * (1.0 - fx) + c[3] * fx;
        a * (1.0 - fy) + b * fy
    }

    fn traversable_at(&self, p: [f64; 2]) -> bool {
        self.geometry
            .cell_of(p)
            .is_some_and(|(i, j)| self.traversable(self.geometry.index(i, j)) && self.t[self.geometry.index(i, j)].is_finite())
    }

    fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let h = 0.25 * self.geometry.resolution;
        let dx = (self.interpolate([p[0] + h, p[1]]) - self.interpolate([p[0] - h, p[1]])) / (2.0 * h);
        let dy = (self.interpolate([p[0], p[1] + h]) - self.interpolate([p[0], p[1] - h])) / (2.0 * h);
        [dx, dy]
    }
}

/// Gradient descent on the interpolated arrival time from `start` until
/// within one cell of the goal, then the goal cell centre is appended.
/// Every accepted step strictly lowers the arrival time.
pub fn extract_path(field: &ArrivalField, start: [f64; 2], step: f64) -> Result<Path, PlanError> {
    let g = &field.geometry;
    let res = g.resolution;
    let unreachable = PlanError::StartUnreachable { x: start[0], y: start[1] };
    if !field.traversable_at(start) {
        return Err(unreachable);
    }
    let goal = g.cell_center(field.goal.0, field.goal.1);
    let dist_goal = |p: [f64; 2]| ((p[0] - goal[0]).powi(2) + (p[1] - goal[1]).powi(2)).sqrt();
    if dist_goal(start) < 1e-12 {
        return Ok(Path::from_waypoints(vec![start], vec![0.0]));
    }
    let mut p = start;
    let mut tp = field.interpolate(p);
    let mut waypoints = vec![p];
    let mut arrival = vec![tp];
    let max_iter = (10.0 * (g.width + g.height) as f64 * res / step).ceil() as usize;
    for iter in 0..max_iter {
        if dist_goal(p) <= res {
            if tp > 0.0 {
                waypoints.push(goal);
                arrival.push(0.0);
            }
            return Ok(Path::from_waypoints(waypoints, arrival));
        }
        let grad = field.gradient(p);
        let norm = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
        let stalled = PlanError::DescentStalled {
            iterations: iter,
            x: p[0],
            y: p[1],
        };
        // the field is flat beyond the outer cell centres
        let next = if norm.is_finite() && norm > 0.0 {
            descend(field, p, tp, [-grad[0] / norm, -grad[1] / norm], step)
        } else {
            None
        };
        let next = next.or_else(|| lowest_neighbour(field, p, tp));
        let Some((q, tq)) = next else { return Err(stalled) };
        p = q;
        tp = tq;
        waypoints.push(p);
        arrival.push(tp);
    }
    Err(PlanError::DescentStalled {
        iterations: max_iter,
        x: p[0],
        y: p[1],
    })
}

/// A step along `dir`, shrinking it and then turning up to 90 degrees
/// either way (the field is clamped at the map edge, so the raw gradient
/// can point off the grid).
fn descend(field: &ArrivalField, p: [f64; 2], tp: f64, dir: [f64; 2], step: f64) -> Option<([f64; 2], f64)> {
    for turn in 0..=6 {
        for sign in [1.0, -1.0] {
            if turn == 0 && sign < 0.0 {
                continue;
            }
            let a = sign * turn as f64 * std::f64::consts::PI / 12.0;
            let d = [dir[0] * a.cos() - dir[1] * a.sin(), dir[0] * a.sin() + dir[1] * a.cos()];
            let mut s = step;
            for _ in 0..=6 {
                let q = [p[0] + d[0] * s, p[1] + d[1] * s];
                if field.traversable_at(q) {
                    let tq = field.interpolate(q);
                    if tq < tp {
                        return Some((q, tq));
                    }
                }
                s *= 0.5;
            }
        }
    }
    None
}

/// Centre of the surrounding cell with the lowest arrival time below `tp`.
fn lowest_neighbour(field: &ArrivalField, p: [f64; 2], tp: f64) -> Option<([f64; 2], f64)> {
    let g = &field.geometry;
    let (i, j) = g.cell_of(p)?;
    let mut best: Option<([f64; 2], f64)> = None;
    for dj in -1i64..=1 {
        for di in -1i64..=1 {
            let (ni, nj) = (i as i64 + di, j as i64 + dj);
            if ni < 0 || nj < 0 || ni >= g.width as i64 || nj >= g.height as i64 {
                continue;
            }
            let q = g.cell_center(ni as usize, nj as usize);
            if !field.traversable_at(q) {
                continue;
            }
            let tq = field.interpolate(q);
            if tq < tp && best.is_none_or(|b| tq < b.1) {
                best = Some((q, tq));
            }
        }
    }
    best
}

fn min_clearance(path: &Path, dist: &DistanceField) -> f64 {
    path.waypoints
        .iter()
        .filter_map(|p| dist.at(*p))
        .fold(f64::INFINITY, f64::min)
}

/// Distance field, speed map, arrival field from the goal, then descent from the start.
pub fn plan(grid: &OccupancyGrid, start: [f64; 2], goal: [f64; 2], cfg: &PlannerConfig) -> Result<Path, PlanError> {
    cfg.validate()?;
    let dist = distance_field(grid, cfg.p_occ)?;
    let vmap = velocity_map(&dist, cfg.d_sat, cfg.alpha);
    let goal_cell = grid
        .geometry
        .cell_of(goal)
        .ok_or(PlanError::GoalBlocked { x: goal[0], y: goal[1] })?;
    let field = arrival_field(&vmap, goal_cell, cfg.w_floor)?;
    let mut path = extract_path(&field, start, cfg.step_fraction * grid.resolution())?;
    path.min_clearance = min_clearance(&path, &dist);
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navmap::GridGeometry;

    fn empty(n: usize, res: f64) -> OccupancyGrid {
        OccupancyGrid::new(GridGeometry::new(n, n, res, [0.0, 0.0]), "test")
    }

    #[test]
    fn start_equals_goal() {
        let g = empty(10, 1.0);
        let p = plan(&g, [4.5, 4.5], [4.5, 4.5], &PlannerConfig::default()).unwrap();
        assert_eq!(p.waypoints.len(), 1);
        assert_eq!(p.length, 0.0);
    }

    #[test]
    fn open_map_path_descends() {
        let g = empty(100, 0.1);
        let p = plan(&g, [1.0, 1.0], [8.0, 8.0], &PlannerConfig::default()).unwrap();
        assert!(p.arrival.windows(2).all(|w| w[1] < w[0]));
        let euclid = 7.0 * 2f64.sqrt();
        assert!(p.length <= 1.5 * euclid);
        let last = p.waypoints.last().unwrap();
        assert!((last[0] - 8.05).abs() < 0.11 && (last[1] - 8.05).abs() < 0.11);
    }

    #[test]
    fn goal_in_obstacle() {
        let mut g = empty(20, 0.1);
        g.set(10, 10, 5.0);
        let e = plan(&g, [0.5, 0.5], [1.05, 1.05], &PlannerConfig::default()).unwrap_err();
        assert!(matches!(e, PlanError::GoalBlocked { .. }));
    }

    #[test]
    fn start_in_obstacle() {
        let mut g = empty(20, 0.1);
        g.set(2, 2, 5.0);
        let e = plan(&g, [0.25, 0.25], [1.55, 1.55], &PlannerConfig::default()).unwrap_err();
        assert!(matches!(e, PlanError::StartUnreachable { .. }));
    }
}
