mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use proptest::prelude::*;
use rover_core::executive::{
    decompose, escalate, stamp_safe_zone, AutonomyLevel, Bus, BusConfig, BusEvent, Dedupe, EmergencyKind, Envelope,
    EscalationEvent, EscalationPhase, EscalationState, ExecConfig, GoalKind, GoalMsg, Knowledge, MapDigest, Message,
    MonitorConfig, PeerState, RoverExecutive,
};
use rover_core::geometry::Pose2;
use rover_core::navmap::GridGeometry;
use rover_core::planner::{plan, PlannerConfig};

fn knowledge() -> Knowledge {
    serde_json::from_value(serde_json::json!({
        "agent": "lamarr",
        "map_extent": [0.0, 0.0, 12.0, 8.0],
        "container": "mae"
    }))
    .unwrap()
}

fn explore(region: [f64; 4], spacing: f64) -> GoalMsg {
    GoalMsg {
        goal_id: "explore".into(),
        issuer: "control".into(),
        target: "lamarr".into(),
        level: AutonomyLevel::E4,
        kind: GoalKind::ExploreRegion,
        params: BTreeMap::from([
            ("region".to_string(), serde_json::json!(region)),
            ("spacing".to_string(), serde_json::json!(spacing)),
        ]),
        priority: 1,
    }
}

fn executive() -> RoverExecutive {
    RoverExecutive::new(
        knowledge(),
        ExecConfig::default(),
        Pose2::new(1.0, 4.0, 0.0),
        GridGeometry::new(120, 80, 0.1, [0.0, 0.0]),
    )
}

#[test]
fn peer_disc_is_avoided() {
    let mut ex = executive();
    let peer = Pose2::new(6.0, 4.0, 0.0);
    ex.peers.insert(
        "mae".into(),
        PeerState {
            pose: Some(peer),
            pose_tick: 1,
            heartbeat: Some(1),
        },
    );
    let cost = ex.costmap();
    let k = cost.geometry.index(60, 40);
    assert!(cost.is_occupied(k, 0.65));
    let p = plan(&cost, [1.05, 4.05], [10.95, 4.05], &PlannerConfig::default()).unwrap();
    let r = 2.0 * ex.config.rover_radius;
    for w in &p.waypoints {
        assert!(peer.distance_to(*w) > r, "waypoint {w:?} inside the peer disc");
    }
}

#[test]
fn own_footprint_is_cleared() {
    let mut ex = executive();
    ex.map.stamp_disc([1.0, 4.0], 0.5);
    let cost = ex.costmap();
    let (i, j) = cost.geometry.cell_of([1.0, 4.0]).unwrap();
    assert!(!cost.is_occupied(cost.geometry.index(i, j), 0.65));
}

#[test]
fn plans_route_around_the_safe_zone() {
    let ex = executive();
    let mut cost = ex.costmap();
    let cfg = MonitorConfig::default();
    let site = [6.0, 4.0];
    stamp_safe_zone(&mut cost, site, &cfg);
    let p = plan(&cost, [1.05, 4.05], [10.95, 4.05], &PlannerConfig::default()).unwrap();
    for w in &p.waypoints {
        let d = (w[0] - site[0]).hypot(w[1] - site[1]);
        assert!(d > cfg.safe_zone, "waypoint {w:?} {d:.2} m from the worksite");
    }
}

#[test]
fn map_digest_round_trips_to_quantisation() {
    let g = random_obstacle_map(&mut rng(5), 30, 20, 0.2);
    let back = MapDigest::from_grid(&g).to_grid().unwrap();
    assert_eq!(back.geometry, g.geometry);
    for (a, b) in g.logodds.iter().zip(&back.logodds) {
        assert!((a - b).abs() <= 0.5 / 25.0 + 1e-12);
    }
}

#[test]
fn lossy_bus_delivers_every_reliable_message_once() {
    let mut bus = Bus::new(
        BusConfig {
            drop_probability: 0.2,
            ..Default::default()
        },
        99,
    );
    let mut sent = BTreeSet::new();
    for n in 0..200 {
        let id = bus.next_msg_id();
        sent.insert(id);
        let goal = GoalMsg {
            goal_id: format!("g{n}"),
            ..explore([0.0, 0.0, 1.0, 1.0], 1.0)
        };
        bus.send(
            Envelope {
                msg_id: id,
                from: "control".into(),
                to: if n % 2 == 0 { "lamarr" } else { "mae" }.into(),
                reliable: true,
                message: Message::Goal(goal),
            },
            0,
        );
    }
    let mut dedupe = Dedupe::default();
    let mut got = BTreeSet::new();
    let mut drops = 0;
    for tick in 0..2000 {
        for e in bus.deliver(tick) {
            match e {
                BusEvent::Delivered { envelope, .. } => {
                    if dedupe.first_time(&envelope) {
                        assert!(got.insert(envelope.msg_id));
                    }
                }
                BusEvent::Dropped { .. } => drops += 1,
            }
        }
        if bus.in_flight() == 0 {
            break;
        }
    }
    assert!(drops > 0);
    assert_eq!(got, sent);
}

proptest! {
    #[test]
    fn resume_runs_exactly_the_pending_steps(
        x0 in 0.0f64..4.0, y0 in 0.0f64..4.0, w in 1.0f64..6.0, h in 1.0f64..4.0,
        spacing in 0.5f64..2.0, at in 0usize..40,
    ) {
        let mut p = decompose(&explore([x0, y0, x0 + w, y0 + h], spacing), &knowledge()).unwrap();
        let n = p.steps.len();
        let stop = at % n;
        for _ in 0..stop {
            p.activate_next().unwrap();
            p.finish_active(true);
        }
        p.activate_next().unwrap();
        let suspended = p.suspend().unwrap();
        let pending = p.pending_indices();
        prop_assert!(!pending.contains(&suspended));
        let mut ran = Vec::new();
        while let Some(k) = p.activate_next() {
            ran.push(k);
            p.finish_active(true);
        }
        prop_assert_eq!(ran, pending);
        prop_assert!(p.is_finished());
    }

    #[test]
    fn control_notified_needs_a_reset(events in prop::collection::vec(0usize..7, 1..60), gaps in prop::collection::vec(0u64..400, 60)) {
        let mut s = EscalationState::new("astronaut", 300);
        let mut tick = 0;
        for (k, e) in events.iter().enumerate() {
            tick += gaps[k];
            let ev = EscalationEvent::ALL[*e];
            let (next, _) = escalate(&s, ev, tick);
            if s.phase == EscalationPhase::ControlNotified && ev != EscalationEvent::Reset {
                prop_assert_eq!(next.phase, EscalationPhase::ControlNotified);
            }
            if ev == EscalationEvent::Reset {
                prop_assert_eq!(next.phase, EscalationPhase::Nominal);
            }
            if s.phase == EscalationPhase::Nominal && next.phase != EscalationPhase::Nominal {
                let emergency = matches!(ev, EscalationEvent::Emergency { .. });
                prop_assert!(emergency);
                prop_assert_eq!(next.alert_tick, Some(tick));
            }
            s = next;
        }
    }
}

#[test]
fn all_emergency_kinds_share_the_machine() {
    for kind in [EmergencyKind::AstronautFall, EmergencyKind::DeviationDetected, EmergencyKind::CommsLost] {
        let s = EscalationState::new("astronaut", 10);
        let (s, a) = escalate(&s, EscalationEvent::Emergency { kind }, 5);
        assert_eq!(s.phase, EscalationPhase::AlertSent);
        assert!(a.is_some());
        let (s, _) = escalate(&s, EscalationEvent::Tick, 15);
        assert_eq!(s.phase, EscalationPhase::ControlNotified);
    }
}
