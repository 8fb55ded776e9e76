use crate::navmap::SegClass;
use crate::pnm::Rgb;
use crate::raster::Raster;

use super::{Entity, Terrain};

/// Elevation encoding for 16-bit PGM: `value = round(elevation / SCALE) + OFFSET`.
pub const ELEVATION_SCALE: f64 = 0.001;
pub const ELEVATION_OFFSET: i64 = 32768;

/// Top image row is the terrain's largest-y row.
pub fn terrain_to_pgm16(t: &Terrain) -> Raster<u16> {
    let mut img = Raster::filled(t.width, t.height, 0u16);
    for j in 0..t.height {
        for i in 0..t.width {
            let e = t.elevation[j * t.width + i];
            let v = ((e / ELEVATION_SCALE).round() as i64 + ELEVATION_OFFSET).clamp(0, u16::MAX as i64);
            img.set(i, t.height - 1 - j, v as u16);
        }
    }
    img
}

/// Rock map rendered with the segmentation palette.
pub fn seg_ground_truth(t: &Terrain) -> Raster<Rgb> {
    let mut img = Raster::filled(t.width, t.height, SegClass::Soil.color());
    for j in 0..t.height {
        for i in 0..t.width {
            img.set(i, t.height - 1 - j, t.rock_map[j * t.width + i].seg_class().color());
        }
    }
    img
}

pub fn entities_json(entities: &[Entity]) -> String {
    serde_json::to_string_pretty(entities).expect("entities serialise")
}
