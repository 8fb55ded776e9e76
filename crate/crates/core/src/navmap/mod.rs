//! Segmentation-masked depth filtering, log-odds occupancy grids, map fusion
//! and the palettised mask codec.

mod codec;
mod fusion;
mod grid;
mod integrate;
mod io;
mod mask;
mod seg;

pub use codec::{decode_mask, encode_mask, CodecError, PalettisedMask, MASK_HEADER_LEN, MASK_MAGIC};
pub use fusion::fuse_maps;
pub use grid::{logit, logistic, GridGeometry, OccupancyGrid};
pub use integrate::{integrate_depth, integrate_depth_in_place, FlatGround, GroundHeight, IntegrateConfig};
pub use io::{load_grid, render_grid, save_grid, GridSidecar};
pub use mask::mask_depth;
pub use seg::{seg_mask_to_rgb, SegClass, SegMask, PALETTE};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NavmapError {
    #[error("depth and segmentation mask dimensions differ ({depth:?} vs {mask:?})")]
    DimensionMismatch {
        depth: (usize, usize),
        mask: (usize, usize),
    },
    #[error("camera position ({x:.3}, {y:.3}) lies outside the grid")]
    PoseOutsideGrid { x: f64, y: f64 },
    #[error("grid resolutions differ ({a} vs {b})")]
    ResolutionMismatch { a: f64, b: f64 },
}
