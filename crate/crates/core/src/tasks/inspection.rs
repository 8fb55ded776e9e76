use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::geometry::{Pose2, Vec3};
use crate::world::{BBox, DetectionClass, Entity, Extent, SensorFrame};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error("tag {0} not seen in any frame")]
    TagNotSeen(u32),
    #[error("rack `{rack}` unreachable at tag {tag_id}: {reason}")]
    RackUnreachable { rack: String, tag_id: u32, reason: String },
    #[error("invalid rack: {0}")]
    InvalidRack(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RackSpec {
    pub rack_id: String,
    pub tag_ids: Vec<u32>,
    /// Panel centre poses; the heading is the direction the panel face points.
    pub panel_poses: Vec<Pose2>,
    #[serde(default = "default_standoff")]
    pub standoff: f64,
    #[serde(default)]
    pub ground_elevation: f64,
}

fn default_standoff() -> f64 {
    1.5
}

impl RackSpec {
    pub fn panel_count(&self) -> usize {
        self.tag_ids.len()
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        if self.tag_ids.len() != self.panel_poses.len() {
            return Err(TaskError::InvalidRack(format!(
                "{} tag ids for {} panel poses",
                self.tag_ids.len(),
                self.panel_poses.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.tag_ids.iter().find(|t| !seen.insert(**t)) {
            return Err(TaskError::InvalidRack(format!("duplicate tag id {dup}")));
        }
        if self.standoff <= 0.0 {
            return Err(TaskError::InvalidRack("standoff must be positive".into()));
        }
        Ok(())
    }

    /// Pose in front of panel `k`, facing it.
    pub fn standoff_pose(&self, k: usize) -> Pose2 {
        let p = self.panel_poses[k];
        let (s, c) = p.heading.sin_cos();
        Pose2::new(
            p.x + c * self.standoff,
            p.y + s * self.standoff,
            crate::geometry::wrap_angle(p.heading + std::f64::consts::PI),
        )
    }

    pub fn geometry(&self, k: usize) -> PanelGeometry {
        PanelGeometry::from_pose(&self.panel_poses[k], &Entity::PANEL_EXTENT, Entity::PANEL_LIFT, self.ground_elevation)
    }
}

/// Corners of a panel's front face in world coordinates
/// (bottom-left, bottom-right, top-right, top-left as seen from the front).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelGeometry {
    pub corners: [Vec3; 4],
}

impl PanelGeometry {
    pub fn from_pose(pose: &Pose2, extent: &Extent, lift: f64, ground: f64) -> Self {
        let f = Vec3::new(pose.heading.cos(), pose.heading.sin(), 0.0);
        let l = Vec3::new(-pose.heading.sin(), pose.heading.cos(), 0.0);
        let c = Vec3::new(pose.x, pose.y, ground + lift + extent.h / 2.0) + f * (extent.depth / 2.0);
        let (hw, hh) = (l * (extent.w / 2.0), Vec3::z() * (extent.h / 2.0));
        PanelGeometry {
            corners: [c + hw - hh, c - hw - hh, c - hw + hh, c + hw + hh],
        }
    }

    pub fn from_entity(e: &Entity, ground: f64) -> Self {
        Self::from_pose(&e.pose, &e.extent, e.lift, ground)
    }

    pub fn projections(&self, cam: &CameraModel) -> [Option<[f64; 2]>; 4] {
        self.corners.map(|c| cam.project(&cam.world_to_camera(&c)))
    }

    /// Image-space bounding box of the visible part of the face.
    pub fn image_region(&self, cam: &CameraModel) -> Option<BBox> {
        let pts: Vec<[f64; 2]> = self.projections(cam).into_iter().flatten().collect();
        if pts.is_empty() {
            return None;
        }
        let x0 = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let x1 = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        let y0 = pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let y1 = pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let k = &cam.intrinsics;
        BBox::from_corners(x0, y0, x1, y1).clip(k.width as f64, k.height as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Good,
    Spotted,
    Cracked,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PanelEvidence {
    /// Frames in which the panel's tag was detected.
    pub frames_observed: usize,
    pub crack_detections: usize,
    /// Per corner: inside the image margin in at least one frame.
    pub corners_visible: [bool; 4],
    /// All four corners inside the margin together in some frame.
    pub fully_visible: bool,
    #[serde(default)]
    pub tag_not_seen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRecord {
    pub tag_id: u32,
    pub verdict: Verdict,
    pub evidence: PanelEvidence,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionReport {
    pub rack_id: String,
    pub records: Vec<PanelRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InspectionConfig {
    /// Pixels a corner must stay inside the image border.
    pub margin_px: f64,
    pub frames_per_panel: usize,
    /// Captures allowed per panel before giving up on the tag.
    pub dwell_timeout: usize,
}

impl Default for InspectionConfig {
    fn default() -> Self {
        InspectionConfig {
            margin_px: 5.0,
            frames_per_panel: 3,
            dwell_timeout: 10,
        }
    }
}

/// Cracked beats Spotted beats Good.
pub fn verdict_from_evidence(fully_visible: bool, crack_detections: usize) -> Verdict {
    if crack_detections > 0 {
        Verdict::Cracked
    } else if fully_visible {
        Verdict::Good
    } else {
        Verdict::Spotted
    }
}

fn sees_tag(frame: &SensorFrame, tag_id: u32) -> bool {
    frame
        .rgb_detections
        .iter()
        .any(|d| d.class_label == DetectionClass::AprilTag && d.tag_id == Some(tag_id))
}

/// Verdict for one panel from the frames in which its tag was detected.
pub fn classify_panel(
    tag_id: u32,
    frames: &[SensorFrame],
    panel: &PanelGeometry,
    cfg: &InspectionConfig,
) -> Result<PanelRecord, TaskError> {
    let tagged: Vec<&SensorFrame> = frames.iter().filter(|f| sees_tag(f, tag_id)).collect();
    if tagged.is_empty() {
        return Err(TaskError::TagNotSeen(tag_id));
    }
    let mut ev = PanelEvidence {
        frames_observed: tagged.len(),
        ..Default::default()
    };
    for f in &tagged {
        let k = &f.camera.intrinsics;
        let m = cfg.margin_px;
        let inside = panel.projections(&f.camera).map(|p| {
            p.is_some_and(|[u, v]| u >= m && u <= k.width as f64 - m && v >= m && v <= k.height as f64 - m)
        });
        for (acc, ok) in ev.corners_visible.iter_mut().zip(inside) {
            *acc |= ok;
        }
        ev.fully_visible |= inside.iter().all(|b| *b);
        if let Some(region) = panel.image_region(&f.camera) {
            ev.crack_detections += f
                .rgb_detections
                .iter()
                .filter(|d| d.class_label == DetectionClass::Crack && d.bbox.overlaps(&region))
                .count();
        }
    }
    Ok(PanelRecord {
        tag_id,
        verdict: verdict_from_evidence(ev.fully_visible, ev.crack_detections),
        evidence: ev,
        tick: tagged.iter().map(|f| f.tick).max().unwrap_or(0),
    })
}

/// Collects frames for one panel until enough show its tag or the dwell runs out.
#[derive(Debug, Clone)]
pub struct PanelCapture {
    pub tag_id: u32,
    pub frames: Vec<SensorFrame>,
    pub attempts: usize,
    last_tick: u64,
}

impl PanelCapture {
    pub fn new(tag_id: u32) -> Self {
        PanelCapture {
            tag_id,
            frames: Vec::new(),
            attempts: 0,
            last_tick: 0,
        }
    }

    /// Returns true once no more frames are needed.
    pub fn offer(&mut self, frame: SensorFrame, cfg: &InspectionConfig) -> bool {
        self.attempts += 1;
        self.last_tick = frame.tick;
        if sees_tag(&frame, self.tag_id) {
            self.frames.push(frame);
        }
        self.is_done(cfg)
    }

    pub fn is_done(&self, cfg: &InspectionConfig) -> bool {
        self.frames.len() >= cfg.frames_per_panel || self.attempts >= cfg.dwell_timeout
    }

    pub fn finish(&self, panel: &PanelGeometry, cfg: &InspectionConfig) -> PanelRecord {
        classify_panel(self.tag_id, &self.frames, panel, cfg).unwrap_or_else(|_| PanelRecord {
            tag_id: self.tag_id,
            verdict: Verdict::Spotted,
            evidence: PanelEvidence {
                tag_not_seen: true,
                ..Default::default()
            },
            tick: self.last_tick,
        })
    }
}

/// What inspection needs from a rover.
pub trait RoverInterface {
    fn move_to(&mut self, pose: Pose2) -> Result<(), String>;
    fn capture(&mut self) -> SensorFrame;
}

/// Visits standoff poses in tag order and classifies each panel.
pub fn inspect_rack(
    rack: &RackSpec,
    rover: &mut impl RoverInterface,
    cfg: &InspectionConfig,
) -> Result<Vec<PanelRecord>, TaskError> {
    rack.validate()?;
    let mut out = Vec::with_capacity(rack.panel_count());
    for (k, &tag_id) in rack.tag_ids.iter().enumerate() {
        rover
            .move_to(rack.standoff_pose(k))
            .map_err(|reason| TaskError::RackUnreachable {
                rack: rack.rack_id.clone(),
                tag_id,
                reason,
            })?;
        let mut cap = PanelCapture::new(tag_id);
        while !cap.offer(rover.capture(), cfg) {}
        out.push(cap.finish(&rack.geometry(k), cfg));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_is_total_and_monotone() {
        for fully in [false, true] {
            for cracks in 0..4 {
                let v = verdict_from_evidence(fully, cracks);
                let worse = verdict_from_evidence(fully, cracks + 1);
                assert!(worse >= v);
                assert_eq!(worse, Verdict::Cracked);
            }
        }
        assert_eq!(verdict_from_evidence(true, 0), Verdict::Good);
        assert_eq!(verdict_from_evidence(false, 0), Verdict::Spotted);
    }

    #[test]
    fn standoff_faces_panel() {
        let rack = RackSpec {
            rack_id: "r".into(),
            tag_ids: vec![1],
            panel_poses: vec![Pose2::new(5.0, 5.0, std::f64::consts::FRAC_PI_2)],
            standoff: 1.5,
            ground_elevation: 0.0,
        };
        let s = rack.standoff_pose(0);
        assert!((s.x - 5.0).abs() < 1e-12 && (s.y - 6.5).abs() < 1e-12);
        assert!((s.heading + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn empty_rack() {
        struct Never;
        impl RoverInterface for Never {
            fn move_to(&mut self, _: Pose2) -> Result<(), String> {
                unreachable!()
            }
            fn capture(&mut self) -> SensorFrame {
                unreachable!()
            }
        }
        let rack = RackSpec {
            rack_id: "r".into(),
            tag_ids: vec![],
            panel_poses: vec![],
            standoff: 1.5,
            ground_elevation: 0.0,
        };
        assert!(inspect_rack(&rack, &mut Never, &InspectionConfig::default()).unwrap().is_empty());
    }
}
