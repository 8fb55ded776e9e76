use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::world::RawDetection;

use super::{locate_with_depths, LocateConfig, TrackInput, Tracker, TrackerConfig, TrackerError};

/// Depth evidence needed to re-locate a frame's detections without the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRef {
    pub camera: CameraModel,
    pub roi_depths: Vec<Option<f64>>,
}

/// One line of a detection replay file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayFrame {
    #[serde(default)]
    pub agent: String,
    pub tick: u64,
    pub detections: Vec<RawDetection>,
    pub depth_ref: DepthRef,
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("line {line}: {detections} detections but {depths} ROI depths")]
    Mismatch { line: usize, detections: usize, depths: usize },
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_replay_line(w: &mut impl Write, frame: &ReplayFrame) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, frame)?;
    w.write_all(b"\n")
}

pub fn read_replay(r: impl BufRead) -> Result<Vec<ReplayFrame>, ReplayError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: ReplayFrame = serde_json::from_str(&line).map_err(|source| ReplayError::Parse { line: i + 1, source })?;
        if f.detections.len() != f.depth_ref.roi_depths.len() {
            return Err(ReplayError::Mismatch {
                line: i + 1,
                detections: f.detections.len(),
                depths: f.depth_ref.roi_depths.len(),
            });
        }
        out.push(f);
    }
    Ok(out)
}

/// Feeds a replay stream through locate and the tracker, returning the
/// track ids assigned at each frame (in located-detection order).
pub fn track_replay(
    frames: &[ReplayFrame],
    locate_cfg: &LocateConfig,
    tracker_cfg: &TrackerConfig,
) -> Result<Vec<(u64, Vec<u64>)>, ReplayError> {
    let mut tracker = Tracker::new(tracker_cfg.clone())?;
    let mut out = Vec::with_capacity(frames.len());
    for f in frames {
        let located = locate_with_depths(&f.detections, &f.depth_ref.roi_depths, &f.depth_ref.camera, locate_cfg);
        let inputs: Vec<TrackInput> = located
            .iter()
            .filter(|l| l.raw.class_label.is_trackable())
            .map(TrackInput::from)
            .collect();
        tracker.step(&inputs, f.tick)?;
        out.push((f.tick, tracker.last_assignments.clone()));
    }
    Ok(out)
}
