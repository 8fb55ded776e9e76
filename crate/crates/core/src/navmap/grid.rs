use serde::{Deserialize, Serialize};

/// Placement of a regular grid in its frame. Cell `(i, j)` covers
/// `[origin.x + i·res, origin.x + (i+1)·res) × [origin.y + j·res, …)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: [f64; 2],
}

impl GridGeometry {
    pub fn new(width: usize, height: usize, resolution: f64, origin: [f64; 2]) -> Self {
        assert!(width * height > 0, "grid must have at least one cell");
        assert!(resolution > 0.0, "resolution must be positive");
        GridGeometry {
            width,
            height,
            resolution,
            origin,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.width + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    /// Signed cell coordinates of a point (may be outside the grid).
    pub fn cell_coords(&self, p: [f64; 2]) -> (i64, i64) {
        (
            ((p[0] - self.origin[0]) / self.resolution).floor() as i64,
            ((p[1] - self.origin[1]) / self.resolution).floor() as i64,
        )
    }

    pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let (i, j) = self.cell_coords(p);
        self.in_bounds(i, j).then_some((i as usize, j as usize))
    }

    pub fn in_bounds(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.width && (j as usize) < self.height
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.resolution,
            self.origin[1] + (j as f64 + 0.5) * self.resolution,
        ]
    }

    /// Far corner of the covered extent.
    pub fn max_corner(&self) -> [f64; 2] {
        [
            self.origin[0] + self.width as f64 * self.resolution,
            self.origin[1] + self.height as f64 * self.resolution,
        ]
    }
}

pub fn logistic(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// 2D log-odds obstacle belief. Zero log-odds is unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    #[serde(flatten)]
    pub geometry: GridGeometry,
    pub logodds: Vec<f64>,
    pub clamp: [f64; 2],
    pub frame_id: String,
}

impl OccupancyGrid {
    pub const DEFAULT_CLAMP: [f64; 2] = [-5.0, 5.0];

    pub fn new(geometry: GridGeometry, frame_id: impl Into<String>) -> Self {
        OccupancyGrid {
            logodds: vec![0.0; geometry.len()],
            geometry,
            clamp: Self::DEFAULT_CLAMP,
            frame_id: frame_id.into(),
        }
    }

    pub fn width(&self) -> usize {
        self.geometry.width
    }

    pub fn height(&self) -> usize {
        self.geometry.height
    }

    pub fn resolution(&self) -> f64 {
        self.geometry.resolution
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.logodds[self.geometry.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, l: f64) {
        let idx = self.geometry.index(i, j);
        self.logodds[idx] = l.clamp(self.clamp[0], self.clamp[1]);
    }

    pub fn add(&mut self, i: usize, j: usize, delta: f64) {
        let idx = self.geometry.index(i, j);
        self.logodds[idx] = (self.logodds[idx] + delta).clamp(self.clamp[0], self.clamp[1]);
    }

    pub fn at(&self, p: [f64; 2]) -> Option<f64> {
        self.geometry.cell_of(p).map(|(i, j)| self.get(i, j))
    }

    pub fn probability(&self, i: usize, j: usize) -> f64 {
        logistic(self.get(i, j))
    }

    pub fn is_occupied(&self, idx: usize, p_occ: f64) -> bool {
        logistic(self.logodds[idx]) >= p_occ
    }

    /// Marks every cell whose centre lies within `radius` of `center` as certainly occupied.
    pub fn stamp_disc(&mut self, center: [f64; 2], radius: f64) {
        let g = self.geometry;
        let (ci, cj) = g.cell_coords(center);
        let r = (radius / g.resolution).ceil() as i64 + 1;
        for j in (cj - r)..=(cj + r) {
            for i in (ci - r)..=(ci + r) {
                if !g.in_bounds(i, j) {
                    continue;
                }
                let c = g.cell_center(i as usize, j as usize);
                if (c[0] - center[0]).hypot(c[1] - center[1]) <= radius {
                    let idx = g.index(i as usize, j as usize);
                    self.logodds[idx] = self.clamp[1];
                }
            }
        }
    }

    /// Fraction of cells carrying any evidence.
    pub fn known_fraction(&self) -> f64 {
        let known = self.logodds.iter().filter(|l| **l != 0.0).count();
        known as f64 / self.logodds.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_clamps() {
        let mut g = OccupancyGrid::new(GridGeometry::new(4, 4, 0.5, [0.0, 0.0]), "a");
        g.set(1, 1, 9.0);
        assert_eq!(g.get(1, 1), 5.0);
        g.add(1, 1, -20.0);
        assert_eq!(g.get(1, 1), -5.0);
    }

    #[test]
    fn cell_lookup() {
        let g = GridGeometry::new(10, 5, 0.2, [-1.0, 0.0]);
        assert_eq!(g.cell_of([-0.99, 0.01]), Some((0, 0)));
        assert_eq!(g.cell_of([0.95, 0.95]), Some((9, 4)));
        assert_eq!(g.cell_of([1.01, 0.5]), None);
        let c = g.cell_center(3, 2);
        assert_eq!(g.cell_of(c), Some((3, 2)));
    }

    #[test]
    fn logit_inverts_logistic() {
        for l in [-4.0, -0.3, 0.0, 0.85, 3.0] {
            assert!((logit(logistic(l)) - l).abs() < 1e-12);
        }
    }
}
