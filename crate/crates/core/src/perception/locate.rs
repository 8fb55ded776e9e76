use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::raster::Raster;
use crate::world::{BBox, RawDetection, SensorFrame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocateConfig {
    pub min_range: f64,
    pub max_range: f64,
    /// Fraction of the bbox area averaged for depth, centred on the bbox.
    pub roi_area_fraction: f64,
}

impl Default for LocateConfig {
    fn default() -> Self {
        LocateConfig {
            min_range: 0.3,
            max_range: 15.0,
            roi_area_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocatedDetection {
    pub raw: RawDetection,
    /// Camera frame (x right, y down, z forward).
    pub position: [f64; 3],
    pub mean_depth: f64,
    pub world: [f64; 3],
}

/// Mean of the finite depths whose pixel centres fall inside the central
/// sub-ROI. The pixel containing the bbox centre is always sampled.
pub fn roi_mean_depth(depth: &Raster<f64>, bbox: &BBox, area_fraction: f64) -> Option<f64> {
    let s = area_fraction.sqrt();
    let (hw, hh) = (bbox.w * s / 2.0, bbox.h * s / 2.0);
    let clampx = |x: f64| x.clamp(0.0, depth.width as f64 - 1.0) as usize;
    let clampy = |y: f64| y.clamp(0.0, depth.height as f64 - 1.0) as usize;
    // pixel u is sampled when its centre u + 0.5 lies in [cx - hw, cx + hw]
    let u0 = clampx((bbox.cx - hw - 0.5).ceil());
    let u1 = clampx((bbox.cx + hw - 0.5).floor());
    let v0 = clampy((bbox.cy - hh - 0.5).ceil());
    let v1 = clampy((bbox.cy + hh - 0.5).floor());
    let (uc, vc) = (clampx(bbox.cx.floor()), clampy(bbox.cy.floor()));
    let (u0, u1) = (u0.min(uc), u1.max(uc));
    let (v0, v1) = (v0.min(vc), v1.max(vc));
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in v0..=v1 {
        for u in u0..=u1 {
            let d = *depth.get(u, v);
            if d.is_finite() {
                sum += d;
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Back-projects detections given precomputed ROI depths (one per detection).
pub fn locate_with_depths(
    detections: &[RawDetection],
    roi_depths: &[Option<f64>],
    camera: &CameraModel,
    cfg: &LocateConfig,
) -> Vec<LocatedDetection> {
    detections
        .iter()
        .zip(roi_depths)
        .filter_map(|(det, d)| {
            let d = (*d)?;
            if !(cfg.min_range..=cfg.max_range).contains(&d) {
                return None;
            }
            let p = camera.pixel_ray(det.bbox.cx, det.bbox.cy) * d;
            let w = camera.camera_to_world(&p);
            Some(LocatedDetection {
                raw: det.clone(),
                position: [p.x, p.y, p.z],
                mean_depth: d,
                world: [w.x, w.y, w.z],
            })
        })
        .collect()
}

pub fn frame_roi_depths(frame: &SensorFrame, cfg: &LocateConfig) -> Vec<Option<f64>> {
    frame
        .rgb_detections
        .iter()
        .map(|d| roi_mean_depth(&frame.depth, &d.bbox, cfg.roi_area_fraction))
        .collect()
}

/// Average depth inside each ROI, then pinhole back-projection of the bbox
/// centre; detections without finite evidence or out of range are dropped.
pub fn locate(frame: &SensorFrame, cfg: &LocateConfig) -> Vec<LocatedDetection> {
    locate_with_depths(&frame.rgb_detections, &frame_roi_depths(frame, cfg), &frame.camera, cfg)
}
