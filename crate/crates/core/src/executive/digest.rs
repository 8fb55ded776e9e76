use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::navmap::{GridGeometry, OccupancyGrid};

/// Log-odds quantisation steps per unit.
pub const DIGEST_SCALE: f64 = 25.0;

/// Compact occupancy grid for the bus: one signed byte per cell, base64 text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDigest {
    #[serde(flatten)]
    pub geometry: GridGeometry,
    pub frame_id: String,
    pub cells: String,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DigestError {
    #[error("digest payload is not valid base64")]
    Encoding,
    #[error("digest has {got} cells, geometry needs {want}")]
    Length { got: usize, want: usize },
}

impl MapDigest {
    pub fn from_grid(grid: &OccupancyGrid) -> Self {
        let bytes: Vec<u8> = grid
            .logodds
            .iter()
            .map(|l| ((l * DIGEST_SCALE).round().clamp(-127.0, 127.0) as i8) as u8)
            .collect();
        MapDigest {
            geometry: grid.geometry,
            frame_id: grid.frame_id.clone(),
            cells: STANDARD.encode(bytes),
        }
    }

    pub fn to_grid(&self) -> Result<OccupancyGrid, DigestError> {
        let bytes = STANDARD.decode(&self.cells).map_err(|_| DigestError::Encoding)?;
        if bytes.len() != self.geometry.len() {
            return Err(DigestError::Length {
                got: bytes.len(),
                want: self.geometry.len(),
            });
        }
        let mut g = OccupancyGrid::new(self.geometry, self.frame_id.clone());
        for (dst, b) in g.logodds.iter_mut().zip(bytes) {
            *dst = (b as i8) as f64 / DIGEST_SCALE;
        }
        Ok(g)
    }
}
