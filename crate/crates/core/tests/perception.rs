mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rover_core::perception::{fall_window, EmergencyConfig, FallDetector, TrackInput, Tracker, TrackerConfig, TrackStatus};
use rover_core::world::DetectionClass;

fn input(c: DetectionClass, p: [f64; 3]) -> TrackInput {
    TrackInput {
        class_label: c,
        position: p,
        bbox: None,
    }
}

#[test]
fn noiseless_constant_velocity_converges() {
    let mut t = Tracker::new(TrackerConfig::default()).unwrap();
    let v = [0.6, -0.4, 0.0];
    let at = |tick: u64| {
        let s = tick as f64 * 0.1;
        [2.0 + v[0] * s, 5.0 + v[1] * s, 0.9]
    };
    for tick in 1..=200 {
        t.step(&[input(DetectionClass::Rover, at(tick))], tick).unwrap();
    }
    let tr = &t.tracks()[0];
    let (p, vel, want) = (tr.position(), tr.velocity(), at(200));
    for k in 0..3 {
        assert!((p[k] - want[k]).abs() < 1e-3, "position {p:?} vs {want:?}");
        assert!((vel[k] - v[k]).abs() < 1e-3, "velocity {vel:?} vs {v:?}");
    }
    assert_eq!(tr.status, TrackStatus::Confirmed);
}

#[test]
fn unmatched_track_is_deleted_after_misses() {
    let cfg = TrackerConfig::default();
    let mut t = Tracker::new(cfg.clone()).unwrap();
    for tick in 1..=4 {
        t.step(&[input(DetectionClass::Rock, [1.0, 1.0, 0.0])], tick).unwrap();
    }
    let mut tick = 5;
    while !t.tracks().is_empty() {
        t.step(&[], tick).unwrap();
        tick += 1;
        assert!(tick < 5 + 2 * cfg.delete_misses as u64 + 2, "track never deleted");
    }
}

#[test]
fn classes_never_share_a_track() {
    let mut t = Tracker::new(TrackerConfig::default()).unwrap();
    let a = [input(DetectionClass::Rock, [1.0, 1.0, 0.0]), input(DetectionClass::Astronaut, [1.05, 1.0, 0.0])];
    for tick in 1..=5 {
        t.step(&a, tick).unwrap();
        assert_eq!(t.last_assignments.len(), 2);
        assert_ne!(t.last_assignments[0], t.last_assignments[1]);
    }
}

#[test]
fn fall_window_scales_with_gravity() {
    let earth = fall_window(&EmergencyConfig::with_g(9.81));
    let moon = fall_window(&EmergencyConfig::with_g(1.62));
    assert!((moon / earth - (9.81f64 / 1.62).sqrt()).abs() < 1e-12);
}

#[test]
fn fall_after_recovery_fires_again() {
    let cfg = EmergencyConfig::with_g(1.62);
    let mut samples = free_fall(0, 0.1, 1.62, 1.0);
    let k = samples.last().unwrap().tick + 1;
    samples.extend(stand_up(k, 0.1));
    let mut track = astronaut_track();
    let mut det = FallDetector::new();
    let mut ticks = Vec::new();
    for s in samples {
        track.bbox_history.push_back(s);
        if let Some(e) = det.check(&track, &cfg) {
            ticks.push(e.tick);
        }
    }
    assert_eq!(ticks.len(), 1, "{ticks:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn input_order_does_not_change_tracks(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut a = Tracker::new(TrackerConfig::default()).unwrap();
        let mut b = Tracker::new(TrackerConfig::default()).unwrap();
        let objects: Vec<[f64; 3]> = (0..r.random_range(1..8))
            .map(|_| [r.random_range(0.0..20.0), r.random_range(0.0..20.0), 0.5])
            .collect();
        for tick in 1..=30u64 {
            let mut inputs = Vec::new();
            for o in &objects {
                if r.random_bool(0.85) {
                    let (dx, dy) = (r.random_range(-0.05..0.05), r.random_range(-0.05..0.05));
                    inputs.push(input(DetectionClass::Rock, [o[0] + dx, o[1] + dy, o[2]]));
                }
            }
            if r.random_bool(0.3) {
                inputs.push(input(DetectionClass::Rock, [r.random_range(0.0..20.0), r.random_range(0.0..20.0), 0.0]));
            }
            let mut order: Vec<usize> = (0..inputs.len()).collect();
            order.shuffle(&mut r);
            let shuffled: Vec<TrackInput> = order.iter().map(|k| inputs[*k].clone()).collect();
            a.step(&inputs, tick).unwrap();
            b.step(&shuffled, tick).unwrap();
            for (pos, k) in order.iter().enumerate() {
                prop_assert_eq!(b.last_assignments[pos], a.last_assignments[*k]);
            }
            prop_assert_eq!(a.tracks().len(), b.tracks().len());
            for (x, y) in a.tracks().iter().zip(b.tracks()) {
                prop_assert_eq!(x.id, y.id);
                prop_assert_eq!(x.status, y.status);
                prop_assert!((x.state - y.state).abs().max() < 1e-9);
            }
        }
    }

    #[test]
    fn ids_are_fresh_and_covariances_spd(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        let mut max_id = 0;
        for tick in 1..=60u64 {
            let n = r.random_range(0..6);
            let inputs: Vec<TrackInput> = (0..n)
                .map(|_| input(DetectionClass::Rock, [r.random_range(0.0..10.0), r.random_range(0.0..10.0), 0.0]))
                .collect();
            t.step(&inputs, tick).unwrap();
            for tr in t.tracks() {
                if seen.insert(tr.id) {
                    prop_assert!(tr.id > max_id);
                    max_id = tr.id;
                }
                let p = tr.covariance;
                prop_assert!((p - p.transpose()).abs().max() < 1e-9);
                prop_assert!(p.symmetric_eigenvalues().min() > 0.0);
            }
        }
    }
}
