mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;

use common::*;
use rover_core::executive::GoalState;
use rover_core::harness::{metrics, read_trace, run, trace_bytes, write_trace, MissionReport, Scenario, TraceEvent};
use rover_core::perception::{track_replay, LocateConfig, ReplayFrame};
use serde_json::json;

fn fixture(name: &str) -> Scenario {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    Scenario::load(&p).unwrap()
}

fn ev(tick: u64, source: &str, kind: &str, payload: serde_json::Value) -> TraceEvent {
    TraceEvent {
        tick,
        source: source.into(),
        kind: kind.into(),
        payload,
    }
}

#[test]
fn hand_built_trace_counts() {
    let trace = vec![
        ev(1, "lamarr", "goal_received", json!({"goal_id": "g1", "kind": "CollectSample"})),
        ev(2, "lamarr", "goal_status", json!({"goal_id": "g1", "status": {"state": "active"}})),
        ev(5, "lamarr", "sample_stored", json!({"goal_id": "g1"})),
        ev(6, "lamarr", "goal_status", json!({"goal_id": "g1", "status": {"state": "done"}})),
        ev(9, "sim", "run_end", json!({"coverage": 0.25, "simulated_seconds": 0.9})),
    ];
    let r = metrics(&trace).unwrap();
    let want = MissionReport {
        goals_issued: 1,
        goals_completed: 1,
        goal_status: BTreeMap::from([("g1".to_string(), GoalState::Done)]),
        goal_kinds: BTreeMap::from([("g1".to_string(), "CollectSample".to_string())]),
        collect_sample_goals: 1,
        samples_stored: 1,
        map_coverage: 0.25,
        simulated_seconds: 0.9,
        ..Default::default()
    };
    assert_eq!(r, want);
}

#[test]
fn corrupt_event_reports_its_line() {
    let trace = vec![
        ev(1, "lamarr", "sample_stored", json!({})),
        ev(2, "lamarr", "goal_status", json!({"goal_id": "g1"})),
    ];
    let err = metrics(&trace).unwrap_err().to_string();
    assert!(err.contains('2'), "{err}");
}

#[test]
fn small_run_is_reproducible_and_recomputable() {
    let s = fixture("liveness.json");
    let a = run(&s).unwrap();
    let b = run(&s).unwrap();
    assert_eq!(trace_bytes(&a.trace), trace_bytes(&b.trace));
    assert_eq!(metrics(&a.trace).unwrap(), a.report.deterministic());

    let mut buf = Vec::new();
    write_trace(&mut buf, &a.trace).unwrap();
    let back = read_trace(buf.as_slice()).unwrap();
    assert_eq!(back, a.trace);
    assert_eq!(metrics(&back).unwrap(), a.report.deterministic());
    assert!(back.windows(2).all(|w| w[0].tick <= w[1].tick));
}

#[test]
fn track_replay_reproduces_run_assignments() {
    let s = fixture("liveness.json");
    let out = run(&s).unwrap();
    let mut frames: BTreeMap<String, Vec<(ReplayFrame, Vec<u64>)>> = BTreeMap::new();
    for e in out.trace.iter().filter(|e| e.kind == "perception_frame") {
        let f: ReplayFrame = serde_json::from_value(e.payload["frame"].clone()).unwrap();
        let ids: Vec<u64> = serde_json::from_value(e.payload["track_ids"].clone()).unwrap();
        frames.entry(e.source.clone()).or_default().push((f, ids));
    }
    assert_eq!(frames.len(), 2);
    let mut checked = 0;
    for (agent, stream) in frames {
        let input: Vec<ReplayFrame> = stream.iter().map(|(f, _)| f.clone()).collect();
        let replay = track_replay(&input, &LocateConfig::default(), &s.exec.tracker).unwrap();
        assert_eq!(replay.len(), stream.len());
        for ((tick, ids), (f, recorded)) in replay.iter().zip(&stream) {
            assert_eq!(*tick, f.tick);
            assert_eq!(ids, recorded, "{agent} at tick {tick}");
            checked += ids.len();
        }
    }
    assert!(checked > 0, "no detections in the run");
}

#[test]
fn lossy_runs_settle_every_goal() {
    let base = fixture("liveness.json");
    let seeds: Vec<u64> = (0..100).collect();
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).min(16);
    let failures: Vec<String> = std::thread::scope(|sc| {
        let hs: Vec<_> = seeds
            .chunks(seeds.len().div_ceil(threads))
            .map(|chunk| {
                let base = &base;
                sc.spawn(move || {
                    let mut bad = Vec::new();
                    for seed in chunk {
                        let mut s = base.clone();
                        s.seed = *seed;
                        let r = run(&s).unwrap().report;
                        let open: Vec<_> = r
                            .goal_status
                            .iter()
                            .filter(|(_, st)| !matches!(st, GoalState::Done | GoalState::Failed))
                            .collect();
                        if !open.is_empty() || r.goal_status.len() < 2 {
                            bad.push(format!("seed {seed}: {open:?}"));
                        }
                        if r.messages_dropped == 0 {
                            bad.push(format!("seed {seed}: nothing dropped"));
                        }
                    }
                    bad
                })
            })
            .collect();
        hs.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn failed_sample_still_resumes_exploration() {
    let mut s = fixture("liveness.json");
    s.bus.drop_probability = 0.0;
    for agent in ["lamarr", "mae"] {
        s.overrides.entry(agent.into()).or_default().lock_failures = Some(10);
    }
    let r = run(&s).unwrap().report;
    assert_eq!(r.samples_stored, 0);
    assert_eq!(r.goal_status["lamarr-sample-1"], GoalState::Failed);
    assert_eq!(r.goal_status["explore-lamarr"], GoalState::Done);
    assert!(!r.resumptions.is_empty());
    for res in &r.resumptions {
        assert_eq!(res.resumed_at, res.first_pending);
    }
}

#[test]
fn nominal_scenarios_conserve_and_keep_distance() {
    let s1 = scenario("scenario1.json");
    let s2 = scenario("scenario2.json");
    let (a, b) = std::thread::scope(|sc| {
        let a = sc.spawn(|| run(&s1).unwrap().report);
        let b = sc.spawn(|| run(&s2).unwrap().report);
        (a.join().unwrap(), b.join().unwrap())
    });
    for r in [&a, &b] {
        assert!(r.samples_stored <= r.collect_sample_goals);
        if let Some(d) = r.min_rover_distance {
            assert!(d >= 0.5, "rovers came within {d:.3} m");
        }
    }
    assert!(a.min_rover_distance.is_some());
    assert!(b.cracked() <= s2.schedule.damage.len());
    assert_eq!(b.cracked(), 1);
    assert!(b.repairs_issued >= 1);
}

#[test]
fn unknown_field_reports_its_path() {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(scenario_path("scenario1.json")).unwrap()).unwrap();
    v["entities"][1]["speed"] = json!(3.0);
    let err = Scenario::from_json(&v.to_string()).unwrap_err();
    assert!(err.path.starts_with("entities[1]"), "{err}");
    assert!(err.to_string().contains("ScenarioInvalid"));
}

#[test]
fn semantic_errors_report_their_path() {
    let base: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(scenario_path("scenario2.json")).unwrap()).unwrap();
    let cases = [
        ("/schedule/damage/0/tick", json!(999_999), "schedule.damage[0].tick"),
        ("/entities/1/id", json!("lamarr"), "entities[1].id"),
        ("/version", json!(7), "version"),
    ];
    for (ptr, value, want) in cases {
        let mut v = base.clone();
        *v.pointer_mut(ptr).unwrap_or_else(|| panic!("fixture lacks {ptr}")) = value;
        let s = Scenario::from_json(&v.to_string()).unwrap();
        let err = s.validate().unwrap_err();
        assert_eq!(err.path, want, "{err}");
    }
}

#[test]
fn missing_terrain_file_is_invalid() {
    let mut s = fixture("liveness.json");
    s.terrain = serde_json::from_value(json!({"type": "pgm", "path": "nowhere.pgm", "resolution": 0.1})).unwrap();
    let err = s.validate().unwrap_err();
    assert_eq!(err.path, "terrain.path");
}

#[test]
fn schema_lists_every_scenario_key() {
    let schema: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/scenario.schema.json"))
            .unwrap(),
    )
    .unwrap();
    let documented: Vec<&String> = schema["properties"].as_object().unwrap().keys().collect();
    let s = serde_json::to_value(fixture("liveness.json")).unwrap();
    let actual: Vec<&String> = s.as_object().unwrap().keys().collect();
    let mut a = documented.clone();
    let mut b = actual.clone();
    a.sort();
    b.sort();
    assert_eq!(a, b);
    for k in schema["required"].as_array().unwrap() {
        assert!(b.contains(&&k.as_str().unwrap().to_string()));
    }
}
