use std::collections::{BTreeMap, BTreeSet};

use crate::world::DetectionClass;

use super::{EmergencyConfig, EventKind, PerceptionEvent, Track};

/// Time window (seconds) in which the aspect flip and the drop must both occur.
/// A free fall of `fall_min_drop` takes `sqrt(2·drop/g)`; the factor adds slack.
pub fn fall_window(cfg: &EmergencyConfig) -> f64 {
    cfg.fall_window_factor * (2.0 * cfg.fall_min_drop / cfg.g).sqrt()
}

/// Per-track fall detector. Fires once per episode and re-arms when the
/// bbox aspect returns below the upright threshold.
#[derive(Debug, Clone, Default)]
pub struct FallDetector {
    disarmed: BTreeSet<u64>,
}

impl FallDetector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, track: &Track, cfg: &EmergencyConfig) -> Option<PerceptionEvent> {
        if track.class_label != DetectionClass::Astronaut || track.bbox_history.len() < 2 {
            return None;
        }
        let latest = *track.bbox_history.back()?;
        if latest.aspect() < cfg.fall_aspect_upright {
            self.disarmed.remove(&track.id);
            return None;
        }
        if self.disarmed.contains(&track.id) || latest.aspect() <= cfg.fall_aspect_fallen {
            return None;
        }
        let window = fall_window(cfg);
        let onset = track.bbox_history.iter().rev().skip(1).find(|s| {
            latest.time - s.time <= window
                && s.aspect() < cfg.fall_aspect_upright
                && s.z - latest.z >= cfg.fall_min_drop
        })?;
        self.disarmed.insert(track.id);
        let details = BTreeMap::from([
            ("drop".to_string(), serde_json::json!(onset.z - latest.z)),
            ("duration".to_string(), serde_json::json!(latest.time - onset.time)),
            ("window".to_string(), serde_json::json!(window)),
            ("aspect".to_string(), serde_json::json!(latest.aspect())),
        ]);
        Some(PerceptionEvent {
            kind: EventKind::AstronautFall,
            subject_track: track.id,
            object_track: None,
            tick: latest.tick,
            details,
        })
    }

    pub fn forget(&mut self, track_id: u64) {
        self.disarmed.remove(&track_id);
    }
}
