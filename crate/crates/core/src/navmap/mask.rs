use crate::raster::Raster;

use super::{NavmapError, SegMask};

/// Clears depth wherever segmentation says the direction is traversable:
/// Soil and LittleRock pixels become `+∞`, every other class keeps its depth.
pub fn mask_depth(depth: &Raster<f64>, seg: &SegMask) -> Result<Raster<f64>, NavmapError> {
    if !depth.same_shape(seg) {
        return Err(NavmapError::DimensionMismatch {
            depth: (depth.width, depth.height),
            mask: (seg.width, seg.height),
        });
    }
    let data = depth
        .data
        .iter()
        .zip(&seg.data)
        .map(|(d, c)| if c.is_free() { f64::INFINITY } else { *d })
        .collect();
    Ok(Raster {
        width: depth.width,
        height: depth.height,
        data,
    })
}
