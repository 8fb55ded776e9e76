use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::pnm::{self, PnmError};
use crate::raster::Raster;

use super::{logistic, logit, GridGeometry, OccupancyGrid};

/// Renders occupancy as an 8-bit image: 0 is certainly occupied, 255 certainly
/// free and 127 unknown. Grey level is linear in probability between the
/// probabilities of the two clamp bounds.
pub fn render_grid(grid: &OccupancyGrid) -> Raster<u8> {
    let p_max = logistic(grid.clamp[1]);
    let p_min = logistic(grid.clamp[0]);
    let span = p_max - p_min;
    let g = grid.geometry;
    // row 0 of the image is the top (largest y) row of the grid
    let mut img = Raster::filled(g.width, g.height, 127u8);
    for j in 0..g.height {
        for i in 0..g.width {
            let p = grid.probability(i, j);
            let v = (255.0 * (p_max - p) / span).floor().clamp(0.0, 255.0) as u8;
            img.set(i, g.height - 1 - j, v);
        }
    }
    img
}

/// JSON sidecar stored next to a grid PGM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub resolution: f64,
    pub origin: [f64; 2],
    pub clamp: [f64; 2],
    #[serde(default = "default_frame")]
    pub frame_id: String,
}

fn default_frame() -> String {
    "map".into()
}

#[derive(Debug, thiserror::Error)]
pub enum GridIoError {
    #[error(transparent)]
    Image(#[from] PnmError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("sidecar {path}: {source}")]
    Sidecar {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("sidecar {0}: resolution must be positive")]
    BadResolution(PathBuf),
}

fn sidecar_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("json")
}

pub fn save_grid(grid: &OccupancyGrid, pgm: &Path) -> Result<(), GridIoError> {
    pnm::write_pgm8(pgm, &render_grid(grid))?;
    let meta = GridSidecar {
        resolution: grid.resolution(),
        origin: grid.geometry.origin,
        clamp: grid.clamp,
        frame_id: grid.frame_id.clone(),
    };
    std::fs::write(
        sidecar_path(pgm),
        serde_json::to_string_pretty(&meta).expect("sidecar serialises"),
    )?;
    Ok(())
}

/// Loads a PGM grid. The sidecar is optional; without it the grid has 0.1 m
/// cells at the origin.
pub fn load_grid(pgm: &Path) -> Result<OccupancyGrid, GridIoError> {
    let img = pnm::read_pgm8(pgm)?;
    let side = sidecar_path(pgm);
    let meta = if side.exists() {
        let text = std::fs::read_to_string(&side)?;
        serde_json::from_str::<GridSidecar>(&text).map_err(|source| GridIoError::Sidecar {
            path: side.clone(),
            source,
        })?
    } else {
        GridSidecar {
            resolution: 0.1,
            origin: [0.0, 0.0],
            clamp: OccupancyGrid::DEFAULT_CLAMP,
            frame_id: default_frame(),
        }
    };
    if meta.resolution <= 0.0 {
        return Err(GridIoError::BadResolution(side));
    }
    let geometry = GridGeometry::new(img.width, img.height, meta.resolution, meta.origin);
    let mut grid = OccupancyGrid::new(geometry, meta.frame_id);
    grid.clamp = meta.clamp;
    let p_max = logistic(meta.clamp[1]);
    let p_min = logistic(meta.clamp[0]);
    for j in 0..img.height {
        for i in 0..img.width {
            let v = *img.get(i, img.height - 1 - j) as f64;
            // 127 and 128 straddle p = 0.5 and both read back as unknown
            let l = if v == 127.0 || v == 128.0 {
                0.0
            } else {
                logit(p_max - v / 255.0 * (p_max - p_min))
            };
            grid.set(i, j, l);
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> OccupancyGrid {
        OccupancyGrid::new(GridGeometry::new(6, 4, 0.5, [2.0, 3.0]), "g")
    }

    #[test]
    fn unknown_renders_127() {
        assert!(render_grid(&grid()).data.iter().all(|v| *v == 127));
    }

    #[test]
    fn clamped_extremes() {
        let mut g = grid();
        g.set(0, 0, 5.0);
        g.set(1, 0, -5.0);
        let img = render_grid(&g);
        assert_eq!(*img.get(0, 3), 0);
        assert_eq!(*img.get(1, 3), 255);
    }

    #[test]
    fn slightly_occupied_is_below_midpoint() {
        // p = 0.6 → 255·(σ(5) − 0.6)/(σ(5) − σ(−5)) = 101.6
        let mut g = grid();
        g.set(2, 2, logit(0.6));
        let v = *render_grid(&g).get(2, 1);
        assert_eq!(v, 101);
        assert!(v < 127);
    }

    #[test]
    fn save_load_preserves_occupancy_class() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.pgm");
        let mut g = grid();
        g.set(0, 0, 5.0);
        g.set(5, 3, -5.0);
        save_grid(&g, &path).unwrap();
        let back = load_grid(&path).unwrap();
        assert_eq!(back.geometry, g.geometry);
        assert!(back.get(0, 0) > 4.0);
        assert!(back.get(5, 3) < -4.0);
        assert_eq!(back.get(2, 2), 0.0);
    }
}
