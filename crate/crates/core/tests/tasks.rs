mod common;

use common::*;
use proptest::prelude::*;
use rover_core::harness::{inspect_scenario, TeleportRover};
use rover_core::tasks::{
    inspect_rack, verdict_from_evidence, AbortCause, InspectionConfig, SampleCommand, SampleContext, SampleError,
    SampleEvent, SampleOp, SamplePhase, Tool, ToolError, ToolInput, ToolMode, ToolPhase, ToolState, Verdict,
};

fn ready_shovel() -> ToolState {
    let mut t = ToolState::default();
    t.apply(ToolInput::Assemble(Tool::Shovel)).unwrap();
    for _ in 0..4 {
        t.apply(ToolInput::Success).unwrap();
    }
    t
}

fn tool_input() -> impl Strategy<Value = ToolInput> {
    (0..ToolInput::ALL.len()).prop_map(|k| ToolInput::ALL[k])
}

#[test]
fn swap_tools_through_stowed() {
    let mut t = ready_shovel();
    assert!(t.is_ready(Tool::Shovel));
    assert!(t.apply(ToolInput::Assemble(Tool::Probe)).is_err());
    t.apply(ToolInput::Disassemble).unwrap();
    for _ in 0..4 {
        t.apply(ToolInput::Success).unwrap();
    }
    assert_eq!((t.tool, t.phase, t.mode), (Tool::None, ToolPhase::Stowed, ToolMode::Idle));
    t.apply(ToolInput::Assemble(Tool::Probe)).unwrap();
    for _ in 0..4 {
        t.apply(ToolInput::Success).unwrap();
    }
    assert!(t.is_ready(Tool::Probe));
}

#[test]
fn sampling_happy_path_commands() {
    let ctx = SampleContext {
        tool: ready_shovel(),
        container_distance: 0.4,
    };
    let (mut op, first) = SampleOp::start([3.0, 4.0], "mae", &ToolState::default());
    assert_eq!(first, SampleCommand::AssembleTool { tool: Tool::Shovel });
    assert_eq!(
        op.apply(SampleEvent::ToolVerified, &ctx).unwrap(),
        Some(SampleCommand::NavigateTo { point: [3.0, 4.0] })
    );
    assert_eq!(op.apply(SampleEvent::Arrived, &ctx).unwrap(), Some(SampleCommand::Scoop));
    assert_eq!(
        op.apply(SampleEvent::ScoopComplete, &ctx).unwrap(),
        Some(SampleCommand::Transfer { container: "mae".into() })
    );
    assert_eq!(op.apply(SampleEvent::TransferComplete, &ctx).unwrap(), None);
    assert_eq!(op.phase, SamplePhase::Stored);
}

#[test]
fn sampling_skips_assembly_with_shovel_ready() {
    let (op, first) = SampleOp::start([1.0, 1.0], "mae", &ready_shovel());
    assert_eq!(op.phase, SamplePhase::MoveToSite);
    assert_eq!(first, SampleCommand::NavigateTo { point: [1.0, 1.0] });
}

#[test]
fn guards_leave_the_phase_unchanged() {
    let (mut op, _) = SampleOp::start([1.0, 1.0], "mae", &ready_shovel());
    let no_tool = SampleContext {
        tool: ToolState::default(),
        container_distance: 0.2,
    };
    assert_eq!(op.apply(SampleEvent::Arrived, &no_tool), Err(SampleError::ToolNotReady));
    assert_eq!(op.phase, SamplePhase::MoveToSite);
    let far = SampleContext {
        tool: ready_shovel(),
        container_distance: 3.0,
    };
    op.apply(SampleEvent::Arrived, &far).unwrap();
    op.apply(SampleEvent::ScoopComplete, &far).unwrap();
    assert!(matches!(
        op.apply(SampleEvent::TransferComplete, &far),
        Err(SampleError::ContainerOutOfRange { .. })
    ));
    assert_eq!(op.phase, SamplePhase::Transfer);
    op.apply(SampleEvent::Fault(AbortCause::Container), &far).unwrap();
    assert_eq!(op.phase, SamplePhase::Aborted(AbortCause::Container));
    assert!(op.apply(SampleEvent::Fault(AbortCause::Tool), &far).is_err());
}

#[test]
fn scenario_rack_reports_every_panel_once() {
    let s = scenario("scenario2.json");
    let report = inspect_scenario(&s, "rack-1", &InspectionConfig::default()).unwrap();
    let tags: Vec<u32> = report.records.iter().map(|r| r.tag_id).collect();
    let expected: Vec<u32> = s.racks[0].tag_ids.clone();
    assert_eq!(tags, expected);
}

#[test]
fn unknown_rack_is_an_error() {
    let s = scenario("scenario2.json");
    assert!(inspect_scenario(&s, "rack-9", &InspectionConfig::default()).is_err());
}

#[test]
fn intact_rack_has_no_cracks_at_standoff() {
    let mut s = scenario("scenario2.json");
    s.schedule.damage.clear();
    let mut world = s.build_world().unwrap();
    let mut rover = TeleportRover {
        world: &mut world,
        agent: "lamarr".into(),
        dt: s.dt,
    };
    let records = inspect_rack(&s.racks[0], &mut rover, &InspectionConfig::default()).unwrap();
    assert!(records.iter().all(|r| r.verdict == Verdict::Good), "{records:?}");
}

proptest! {
    #[test]
    fn tool_changer_invariants(inputs in prop::collection::vec(tool_input(), 0..80)) {
        let mut t = ToolState::default();
        for i in inputs {
            let before = t;
            match t.apply(i) {
                Err(ToolError::IllegalTransition { .. }) => prop_assert_eq!(t, before),
                Err(ToolError::LockFailedPermanently { .. }) => prop_assert_eq!(t.retries, 0),
                Ok(()) => {}
            }
            prop_assert!(t.retries <= t.max_retries);
            if t.tool == Tool::None {
                prop_assert_eq!((t.phase, t.mode), (ToolPhase::Stowed, ToolMode::Idle));
            }
            if t.mode == ToolMode::Idle {
                prop_assert!(matches!(t.phase, ToolPhase::Stowed | ToolPhase::Verified));
            }
        }
    }

    #[test]
    fn verdict_is_monotone_in_cracks(fv in any::<bool>(), n in 0usize..50) {
        let a = verdict_from_evidence(fv, n);
        let b = verdict_from_evidence(fv, n + 1);
        prop_assert!(b >= a);
        prop_assert_eq!(b, Verdict::Cracked);
    }
}
