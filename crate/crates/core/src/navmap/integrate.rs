use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::raster::Raster;

use super::{GridGeometry, NavmapError, OccupancyGrid};

/// Terrain height lookup used to tell obstacle returns from ground returns.
pub trait GroundHeight {
    fn ground_height(&self, x: f64, y: f64) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct FlatGround(pub f64);

impl GroundHeight for FlatGround {
    fn ground_height(&self, _x: f64, _y: f64) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrateConfig {
    pub hit_logodds: f64,
    pub miss_logodds: f64,
    pub obstacle_height: f64,
    pub max_range: f64,
    /// Only every `pixel_stride`-th pixel in each direction is cast.
    pub pixel_stride: usize,
}

impl Default for IntegrateConfig {
    fn default() -> Self {
        IntegrateConfig {
            hit_logodds: 0.85,
            miss_logodds: -0.4,
            obstacle_height: 0.15,
            max_range: 15.0,
            pixel_stride: 1,
        }
    }
}

/// Cells crossed by the segment `a → b`, in order, starting with the cell of `a`.
/// Stops at the grid boundary.
pub(crate) fn traverse(g: &GridGeometry, a: [f64; 2], b: [f64; 2], out: &mut Vec<(usize, usize)>) {
    out.clear();
    let (mut i, mut j) = g.cell_coords(a);
    let (ei, ej) = g.cell_coords(b);
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    let res = g.resolution;
    let step_i: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_j: i64 = if dy > 0.0 { 1 } else { -1 };
    let boundary = |c: i64, step: i64, o: f64| o + (c + if step > 0 { 1 } else { 0 }) as f64 * res;
    let mut t_max_x = if dx != 0.0 {
        (boundary(i, step_i, g.origin[0]) - a[0]) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy != 0.0 {
        (boundary(j, step_j, g.origin[1]) - a[1]) / dy
    } else {
        f64::INFINITY
    };
    let t_dx = if dx != 0.0 { res / dx.abs() } else { f64::INFINITY };
    let t_dy = if dy != 0.0 { res / dy.abs() } else { f64::INFINITY };
    let max_steps = ((ei - i).abs() + (ej - j).abs() + 2) as usize;
    for _ in 0..=max_steps {
        if !g.in_bounds(i, j) {
            return;
        }
        out.push((i as usize, j as usize));
        if i == ei && j == ej {
            return;
        }
        if t_max_x < t_max_y {
            if t_max_x > 1.0 {
                return;
            }
            i += step_i;
            t_max_x += t_dx;
        } else {
            if t_max_y > 1.0 {
                return;
            }
            j += step_j;
            t_max_y += t_dy;
        }
    }
}

/// Returns a copy of `grid` updated with one depth image.
pub fn integrate_depth(
    grid: &OccupancyGrid,
    depth: &Raster<f64>,
    camera: &CameraModel,
    ground: &dyn GroundHeight,
    config: &IntegrateConfig,
) -> Result<OccupancyGrid, NavmapError> {
    let mut out = grid.clone();
    integrate_depth_in_place(&mut out, depth, camera, ground, config)?;
    Ok(out)
}

/// Each finite pixel is back-projected along its ray. Returns at least
/// `obstacle_height` above the ground mark their cell as hit; cells crossed
/// before the return are misses. Infinite pixels contribute misses only, up
/// to `max_range` or the ground plane under the camera, whichever is nearer.
/// NaN pixels carry no information and are skipped. Every touched cell is
/// updated once per call and hits take precedence.
pub fn integrate_depth_in_place(
    grid: &mut OccupancyGrid,
    depth: &Raster<f64>,
    camera: &CameraModel,
    ground: &dyn GroundHeight,
    config: &IntegrateConfig,
) -> Result<(), NavmapError> {
    let g = grid.geometry;
    let c = camera.center();
    let c2 = [c.x, c.y];
    if g.cell_of(c2).is_none() {
        return Err(NavmapError::PoseOutsideGrid { x: c.x, y: c.y });
    }
    const NONE: u8 = 0;
    const MISS: u8 = 1;
    const HIT: u8 = 2;
    let mut marks = vec![NONE; g.len()];
    let mut cells = Vec::new();
    let cam_ground = ground.ground_height(c.x, c.y);
    let stride = config.pixel_stride.max(1);

    for v in (0..depth.height).step_by(stride) {
        for u in (0..depth.width).step_by(stride) {
            let d = *depth.get(u, v);
            if d.is_nan() {
                continue;
            }
            let ray = camera.direction_to_world(&camera.pixel_ray(u as f64 + 0.5, v as f64 + 0.5));
            if d.is_finite() && d > 0.0 && d <= config.max_range {
                let p = c + ray * d;
                let end = [p.x, p.y];
                traverse(&g, c2, end, &mut cells);
                let is_obstacle = p.z - ground.ground_height(p.x, p.y) >= config.obstacle_height;
                let hit_cell = if is_obstacle { g.cell_of(end) } else { None };
                for &(i, j) in &cells {
                    let idx = g.index(i, j);
                    if Some((i, j)) == hit_cell {
                        marks[idx] = HIT;
                    } else if marks[idx] == NONE {
                        marks[idx] = MISS;
                    }
                }
                if let Some((i, j)) = hit_cell {
                    marks[g.index(i, j)] = HIT;
                }
            } else {
                let mut t_end = config.max_range;
                if ray.z < -1e-9 {
                    t_end = t_end.min((c.z - cam_ground) / -ray.z);
                }
                let end = [c.x + ray.x * t_end, c.y + ray.y * t_end];
                traverse(&g, c2, end, &mut cells);
                for &(i, j) in &cells {
                    let idx = g.index(i, j);
                    if marks[idx] == NONE {
                        marks[idx] = MISS;
                    }
                }
            }
        }
    }

    for (idx, m) in marks.iter().enumerate() {
        let delta = match *m {
            HIT => config.hit_logodds,
            MISS => config.miss_logodds,
            _ => continue,
        };
        grid.logodds[idx] = (grid.logodds[idx] + delta).clamp(grid.clamp[0], grid.clamp[1]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Intrinsics;

    fn camera() -> CameraModel {
        CameraModel {
            intrinsics: Intrinsics::from_fov(80, 60, std::f64::consts::FRAC_PI_2),
            position: [1.05, 5.05, 0.5],
            heading: 0.0,
        }
    }

    fn grid() -> OccupancyGrid {
        OccupancyGrid::new(GridGeometry::new(100, 100, 0.1, [0.0, 0.0]), "t")
    }

    #[test]
    fn traverse_straight_line() {
        let g = GridGeometry::new(10, 10, 1.0, [0.0, 0.0]);
        let mut cells = Vec::new();
        traverse(&g, [0.5, 0.5], [4.5, 0.5], &mut cells);
        assert_eq!(cells, vec![(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)]);
        traverse(&g, [0.5, 0.5], [20.0, 0.5], &mut cells);
        assert_eq!(cells.len(), 10);
    }

    #[test]
    fn single_finite_pixel_ahead() {
        let cam = camera();
        let mut depth = Raster::filled(80, 60, f64::INFINITY);
        // pixel (40, 30) has its centre half a pixel off the principal point; its ray is nearly level
        depth.set(40, 30, 2.0);
        let cfg = IntegrateConfig {
            max_range: 15.0,
            ..Default::default()
        };
        // the infinite pixels must not reach the hit cell, so only cast the one finite pixel
        let only = Raster::from_vec(
            80,
            60,
            depth.data.iter().map(|d| if d.is_finite() { *d } else { f64::NAN }).collect(),
        )
        .unwrap();
        let out = integrate_depth(&grid(), &only, &cam, &FlatGround(0.0), &cfg).unwrap();
        let positive: Vec<usize> = (0..out.logodds.len()).filter(|&k| out.logodds[k] > 0.0).collect();
        assert_eq!(positive.len(), 1);
        let hit = out.geometry.coords(positive[0]);
        let expect = out.geometry.cell_of([1.05 + 2.0, 5.05]).unwrap();
        assert!((hit.0 as i64 - expect.0 as i64).abs() <= 1 && hit.1 == expect.1);
        // cells between camera and hit are free
        for i in 11..hit.0 {
            assert!(out.get(i, 50) < 0.0, "cell {i} should be free");
        }
    }

    #[test]
    fn all_infinite_depth_never_marks_obstacles() {
        let depth = Raster::filled(80, 60, f64::INFINITY);
        let out = integrate_depth(&grid(), &depth, &camera(), &FlatGround(0.0), &IntegrateConfig::default()).unwrap();
        assert!(out.logodds.iter().all(|l| *l <= 0.0));
        assert!(out.logodds.iter().any(|l| *l < 0.0));
    }

    #[test]
    fn pose_outside_grid() {
        let mut cam = camera();
        cam.position = [-3.0, 1.0, 0.5];
        let depth = Raster::filled(80, 60, f64::INFINITY);
        assert!(matches!(
            integrate_depth(&grid(), &depth, &cam, &FlatGround(0.0), &IntegrateConfig::default()),
            Err(NavmapError::PoseOutsideGrid { .. })
        ));
    }
}
