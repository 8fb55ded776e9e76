use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::navmap::OccupancyGrid;
use crate::perception::{EventKind, PerceptionEvent, Track, TrackStatus};
use crate::world::DetectionClass;

use super::EmergencyKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    pub deviation_radius: f64,
    pub comms_timeout_ticks: u64,
    pub safe_zone: f64,
    /// Ticks the astronaut may go without touching the assigned panel before a reminder.
    pub supervise_timeout_ticks: u64,
    /// Astronaut-panel distance counted as working on that panel.
    pub engage_distance: f64,
    /// Panel track to rack panel association radius.
    pub panel_match_radius: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            deviation_radius: 10.0,
            comms_timeout_ticks: 150,
            safe_zone: 3.0,
            supervise_timeout_ticks: 600,
            engage_distance: 1.5,
            panel_match_radius: 1.5,
        }
    }
}

/// Confirmed astronaut track closest to `near`.
pub fn astronaut_track<'a>(tracks: &'a [Track], near: [f64; 2]) -> Option<&'a Track> {
    let d = |t: &Track| {
        let p = t.position();
        (p[0] - near[0]).hypot(p[1] - near[1])
    };
    tracks
        .iter()
        .filter(|t| t.status == TrackStatus::Confirmed && t.class_label == DetectionClass::Astronaut)
        .min_by(|a, b| d(a).total_cmp(&d(b)).then(a.id.cmp(&b.id)))
}

/// Level-triggered emergency conditions. Deviation uses the tracked
/// astronaut and falls back to its last reported position.
pub fn monitor_astronaut(
    tracks: &[Track],
    reported: Option<[f64; 2]>,
    expected: Option<[f64; 2]>,
    last_heartbeat: Option<u64>,
    tick: u64,
    cfg: &MonitorConfig,
) -> Vec<EmergencyKind> {
    let mut out = Vec::new();
    if let Some(exp) = expected {
        let pos = astronaut_track(tracks, exp)
            .map(|t| {
                let p = t.position();
                [p[0], p[1]]
            })
            .or(reported);
        if let Some(p) = pos {
            if (p[0] - exp[0]).hypot(p[1] - exp[1]) > cfg.deviation_radius {
                out.push(EmergencyKind::DeviationDetected);
            }
        }
    }
    if let Some(hb) = last_heartbeat {
        if tick.saturating_sub(hb) > cfg.comms_timeout_ticks {
            out.push(EmergencyKind::CommsLost);
        }
    }
    out
}

/// Turns level conditions into one event per onset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeLatch {
    active: BTreeSet<EmergencyKind>,
}

impl EdgeLatch {
    pub fn rising(&mut self, current: &[EmergencyKind]) -> Vec<EmergencyKind> {
        let fresh = current.iter().copied().filter(|k| !self.active.contains(k)).collect();
        self.active = current.iter().copied().collect();
        fresh
    }
}

/// Marks the safety zone around a worksite as occupied in a planning costmap.
pub fn stamp_safe_zone(grid: &mut OccupancyGrid, worksite: [f64; 2], cfg: &MonitorConfig) {
    grid.stamp_disc(worksite, cfg.safe_zone);
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Supervision {
    /// Tags of panels the astronaut was seen working on instead of the assigned one.
    pub wrong_tags: Vec<u32>,
    pub correct: bool,
}

/// Checks interaction events against the assigned panel. Each astronaut is
/// attributed to its nearest engaged panel track, which is matched to a rack
/// panel by position.
pub fn supervise_task(
    events: &[PerceptionEvent],
    tracks: &[Track],
    panels: &[(u32, [f64; 2])],
    assigned_tag: u32,
    cfg: &MonitorConfig,
) -> Supervision {
    let mut best: Vec<(u64, f64, u64)> = Vec::new();
    for e in events.iter().filter(|e| e.kind == EventKind::Interaction) {
        let Some(obj) = e.object_track else { continue };
        let Some(t) = tracks.iter().find(|t| t.id == obj) else { continue };
        if t.class_label != DetectionClass::SolarPanel {
            continue;
        }
        let d = e.details.get("distance").and_then(|v| v.as_f64()).unwrap_or(f64::INFINITY);
        if d > cfg.engage_distance {
            continue;
        }
        match best.iter_mut().find(|b| b.0 == e.subject_track) {
            Some(b) if d < b.1 => *b = (e.subject_track, d, obj),
            Some(_) => {}
            None => best.push((e.subject_track, d, obj)),
        }
    }
    let mut out = Supervision::default();
    for (_, _, obj) in best {
        let p = tracks.iter().find(|t| t.id == obj).map(|t| t.position()).unwrap_or([f64::NAN; 3]);
        let tag = panels
            .iter()
            .map(|(tag, q)| (*tag, (q[0] - p[0]).hypot(q[1] - p[1])))
            .filter(|(_, d)| *d <= cfg.panel_match_radius)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match tag {
            Some((t, _)) if t == assigned_tag => out.correct = true,
            Some((t, _)) => {
                if !out.wrong_tags.contains(&t) {
                    out.wrong_tags.push(t)
                }
            }
            None => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::{detect_interaction, EmergencyConfig, Tracker, TrackerConfig};
    use nalgebra::Vector6;

    fn confirmed(objs: &[(DetectionClass, [f64; 3])]) -> Vec<Track> {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        for (c, p) in objs {
            t.spawn(*c, Vector6::new(p[0], p[1], p[2], 0.0, 0.0, 0.0), 0);
        }
        let mut out = t.tracks().to_vec();
        for x in &mut out {
            x.status = TrackStatus::Confirmed;
        }
        out
    }

    #[test]
    fn deviation_beyond_radius() {
        let tr = confirmed(&[(DetectionClass::Astronaut, [12.0, 0.0, 1.0])]);
        let ev = monitor_astronaut(&tr, None, Some([0.0, 0.0]), Some(0), 1, &MonitorConfig::default());
        assert_eq!(ev, vec![EmergencyKind::DeviationDetected]);
    }

    #[test]
    fn nominal_no_events() {
        let tr = confirmed(&[(DetectionClass::Astronaut, [0.5, 0.0, 1.0])]);
        let ev = monitor_astronaut(&tr, None, Some([0.0, 0.0]), Some(90), 100, &MonitorConfig::default());
        assert!(ev.is_empty());
    }

    #[test]
    fn heartbeat_silence() {
        let cfg = MonitorConfig::default();
        assert!(monitor_astronaut(&[], None, None, Some(0), 150, &cfg).is_empty());
        assert_eq!(monitor_astronaut(&[], None, None, Some(0), 151, &cfg), vec![EmergencyKind::CommsLost]);
    }

    #[test]
    fn latch_fires_once_per_onset() {
        let mut l = EdgeLatch::default();
        let c = [EmergencyKind::CommsLost];
        assert_eq!(l.rising(&c).len(), 1);
        assert!(l.rising(&c).is_empty());
        assert!(l.rising(&[]).is_empty());
        assert_eq!(l.rising(&c).len(), 1);
    }

    #[test]
    fn wrong_and_right_panel() {
        let panels = [(7, [0.0, 0.0]), (9, [3.0, 0.0])];
        let cfg = MonitorConfig::default();
        let ecfg = EmergencyConfig::default();
        let tr = confirmed(&[
            (DetectionClass::Astronaut, [3.0, 0.8, 1.0]),
            (DetectionClass::SolarPanel, [0.0, 0.0, 0.8]),
            (DetectionClass::SolarPanel, [3.0, 0.0, 0.8]),
        ]);
        let ev = detect_interaction(&tr, &ecfg, 0);
        let s = supervise_task(&ev, &tr, &panels, 7, &cfg);
        assert_eq!(s.wrong_tags, vec![9]);
        assert!(!s.correct);
        let s = supervise_task(&ev, &tr, &panels, 9, &cfg);
        assert!(s.correct && s.wrong_tags.is_empty());
    }
}
