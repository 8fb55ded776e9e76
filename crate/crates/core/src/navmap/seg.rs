use serde::{Deserialize, Serialize};

use crate::pnm::Rgb;
use crate::raster::Raster;

/// Terrain segmentation classes; the discriminant is the wire index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum SegClass {
    NotLabelled = 0,
    Soil = 1,
    CloseRock = 2,
    FarRock = 3,
    LittleRock = 4,
}

pub type SegMask = Raster<SegClass>;

/// Fixed display palette indexed by [`SegClass`].
pub const PALETTE: [Rgb; 5] = [
    [0, 0, 0],
    [150, 120, 90],
    [220, 30, 40],
    [250, 160, 20],
    [240, 230, 60],
];

impl SegClass {
    pub const ALL: [SegClass; 5] = [
        SegClass::NotLabelled,
        SegClass::Soil,
        SegClass::CloseRock,
        SegClass::FarRock,
        SegClass::LittleRock,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<SegClass> {
        SegClass::ALL.get(i as usize).copied()
    }

    /// Classes whose depth carries no obstacle evidence.
    pub fn is_free(self) -> bool {
        matches!(self, SegClass::Soil | SegClass::LittleRock)
    }

    pub fn color(self) -> Rgb {
        PALETTE[self as usize]
    }
}

pub fn seg_mask_to_rgb(mask: &SegMask) -> Raster<Rgb> {
    Raster {
        width: mask.width,
        height: mask.height,
        data: mask.data.iter().map(|c| c.color()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_classes_fit_three_bits() {
        for (i, c) in SegClass::ALL.iter().enumerate() {
            assert_eq!(c.index() as usize, i);
            assert!(c.index() < 8);
            assert_eq!(SegClass::from_index(i as u8), Some(*c));
        }
        assert_eq!(SegClass::from_index(5), None);
    }
}
