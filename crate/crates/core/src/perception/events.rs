use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::world::DetectionClass;

use super::{Track, TrackStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmergencyConfig {
    pub g: f64,
    pub fall_aspect_upright: f64,
    pub fall_aspect_fallen: f64,
    pub fall_min_drop: f64,
    pub fall_window_factor: f64,
    pub interactive_distance: f64,
    pub dangerous_classes: BTreeSet<DetectionClass>,
}

impl Default for EmergencyConfig {
    fn default() -> Self {
        EmergencyConfig {
            g: Self::EARTH_G,
            fall_aspect_upright: 0.7,
            fall_aspect_fallen: 1.3,
            fall_min_drop: 0.8,
            fall_window_factor: 3.0,
            interactive_distance: 2.0,
            dangerous_classes: BTreeSet::from([DetectionClass::Rock]),
        }
    }
}

impl EmergencyConfig {
    pub const EARTH_G: f64 = 9.81;
    pub const MARS_G: f64 = 3.71;
    pub const MOON_G: f64 = 1.62;

    pub fn with_g(g: f64) -> Self {
        EmergencyConfig {
            g,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.g <= 0.0 {
            return Err("g must be positive".into());
        }
        if self.fall_aspect_fallen <= self.fall_aspect_upright {
            return Err("fall_aspect_fallen must exceed fall_aspect_upright".into());
        }
        if self.fall_min_drop <= 0.0 || self.fall_window_factor <= 0.0 || self.interactive_distance < 0.0 {
            return Err("fall_min_drop and fall_window_factor must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Interaction,
    AstronautFall,
    HazardProximity,
    EquipmentAnomaly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionEvent {
    pub kind: EventKind,
    pub subject_track: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_track: Option<u64>,
    pub tick: u64,
    #[serde(default)]
    pub details: BTreeMap<String, serde_json::Value>,
}

fn pair_events(
    tracks: &[Track],
    distance: f64,
    tick: u64,
    kind: EventKind,
    is_object: impl Fn(DetectionClass) -> bool,
) -> Vec<PerceptionEvent> {
    let confirmed: Vec<&Track> = tracks.iter().filter(|t| t.status == TrackStatus::Confirmed).collect();
    let mut out = Vec::new();
    for a in confirmed.iter().filter(|t| t.class_label == DetectionClass::Astronaut) {
        for o in confirmed.iter().filter(|t| t.id != a.id && is_object(t.class_label)) {
            let d = a.distance_to(o);
            if d <= distance {
                let details = BTreeMap::from([
                    ("distance".to_string(), serde_json::json!(d)),
                    ("object_class".to_string(), serde_json::json!(o.class_label)),
                ]);
                out.push(PerceptionEvent {
                    kind,
                    subject_track: a.id,
                    object_track: Some(o.id),
                    tick,
                    details,
                });
            }
        }
    }
    out
}

/// Astronaut close to a rover or solar panel, one event per pair currently in contact.
pub fn detect_interaction(tracks: &[Track], cfg: &EmergencyConfig, tick: u64) -> Vec<PerceptionEvent> {
    pair_events(tracks, cfg.interactive_distance, tick, EventKind::Interaction, |c| {
        matches!(c, DetectionClass::Rover | DetectionClass::SolarPanel)
    })
}

/// Astronaut close to any track whose class is configured as dangerous.
pub fn detect_hazard_proximity(tracks: &[Track], cfg: &EmergencyConfig, tick: u64) -> Vec<PerceptionEvent> {
    pair_events(tracks, cfg.interactive_distance, tick, EventKind::HazardProximity, |c| {
        cfg.dangerous_classes.contains(&c)
    })
}

/// Passes only the first event of each continuous contact episode of a pair.
#[derive(Debug, Clone, Default)]
pub struct EpisodeFilter {
    active: BTreeSet<(EventKind, u64, Option<u64>)>,
}

impl EpisodeFilter {
    pub fn filter(&mut self, events: Vec<PerceptionEvent>) -> Vec<PerceptionEvent> {
        let current: BTreeSet<_> = events.iter().map(|e| (e.kind, e.subject_track, e.object_track)).collect();
        let fresh = events
            .into_iter()
            .filter(|e| !self.active.contains(&(e.kind, e.subject_track, e.object_track)))
            .collect();
        self.active = current;
        fresh
    }
}
