use crate::navmap::{GridGeometry, OccupancyGrid};

use super::{march, PlanError};

/// Metric distance from each cell centre to the nearest occupied cell centre.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
    /// `false` when the grid had no occupied cell; `values` are then all infinite.
    pub has_obstacles: bool,
    pub occupied: Vec<bool>,
}

impl DistanceField {
    pub fn at(&self, p: [f64; 2]) -> Option<f64> {
        self.geometry.cell_of(p).map(|(i, j)| self.values[self.geometry.index(i, j)])
    }
}

/// Per-cell speed in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityMap {
    pub geometry: GridGeometry,
    pub w: Vec<f64>,
    pub d_sat: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalField {
    pub geometry: GridGeometry,
    pub t: Vec<f64>,
    pub goal: (usize, usize),
    /// Speed used for the march; cells at or below `w_floor` were not entered.
    pub speed: Vec<f64>,
    pub w_floor: f64,
}

impl ArrivalField {
    pub fn traversable(&self, idx: usize) -> bool {
        self.speed[idx] > self.w_floor
    }
}

/// First pass: multi-source march with unit speed from every cell with
/// occupancy probability at least `p_occ`.
pub fn distance_field(grid: &OccupancyGrid, p_occ: f64) -> Result<DistanceField, PlanError> {
    let geometry = grid.geometry.clone();
    let n = geometry.len();
    let occupied: Vec<bool> = (0..n).map(|k| grid.is_occupied(k, p_occ)).collect();
    if occupied.iter().all(|o| *o) {
        return Err(PlanError::NoFreeSpace);
    }
    let sources: Vec<(usize, f64)> = (0..n).filter(|k| occupied[*k]).map(|k| (k, 0.0)).collect();
    let has_obstacles = !sources.is_empty();
    let res = geometry.resolution;
    let values = if has_obstacles {
        march(geometry.width, geometry.height, &sources, |_| Some(res))
    } else {
        vec![f64::INFINITY; n]
    };
    Ok(DistanceField {
        geometry,
        values,
        has_obstacles,
        occupied,
    })
}

/// Saturated speed `W = min(D / d_sat, 1)^alpha`, zero on occupied cells.
pub fn velocity_map(field: &DistanceField, d_sat: f64, alpha: f64) -> VelocityMap {
    assert!(d_sat > 0.0 && alpha > 0.0, "d_sat and alpha must be positive");
    let w = field
        .values
        .iter()
        .zip(&field.occupied)
        .map(|(d, occ)| if *occ { 0.0 } else { (d / d_sat).min(1.0).powf(alpha) })
        .collect();
    VelocityMap {
        geometry: field.geometry.clone(),
        w,
        d_sat,
        alpha,
    }
}

/// Second pass: march from the goal cell with speed `W`; cells with
/// `W <= w_floor` are walls.
pub fn arrival_field(vmap: &VelocityMap, goal: (usize, usize), w_floor: f64) -> Result<ArrivalField, PlanError> {
    let g = &vmap.geometry;
    let gidx = g.index(goal.0, goal.1);
    if vmap.w[gidx] <= w_floor {
        let c = g.cell_center(goal.0, goal.1);
        return Err(PlanError::GoalBlocked { x: c[0], y: c[1] });
    }
    let res = g.resolution;
    let t = march(g.width, g.height, &[(gidx, 0.0)], |k| {
        let w = vmap.w[k];
        (w > w_floor).then(|| res / w)
    });
    Ok(ArrivalField {
        geometry: g.clone(),
        t,
        goal,
        speed: vmap.w.clone(),
        w_floor,
    })
}
