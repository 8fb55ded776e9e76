use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::geometry::{wrap_angle, Pose2, Se2};
use crate::navmap::{
    fuse_maps, integrate_depth_in_place, mask_depth, GridGeometry, GroundHeight, IntegrateConfig, OccupancyGrid,
};
use crate::perception::{
    detect_hazard_proximity, detect_interaction, frame_roi_depths, locate_with_depths, DepthRef, EmergencyConfig,
    EpisodeFilter, FallDetector, LocateConfig, PerceptionEvent, ReplayFrame, TrackInput, Tracker, TrackerConfig,
};
use crate::planner::{follow, plan as plan_path, FollowConfig, Path, PlannerConfig};
use crate::tasks::{
    AbortCause, InspectionConfig, InspectionReport, PanelCapture, PanelRecord, SampleContext, SampleEvent, SampleOp,
    Tool, ToolError, ToolInput, ToolPhase, ToolState, Verdict,
};
use crate::world::SensorFrame;

use super::{
    accept_goal, escalate, monitor_astronaut, repair_geometry, stamp_safe_zone, supervise_task, AstronautReply,
    AutonomyLevel, EdgeLatch, EmergencyKind, Envelope, EscalationAction, EscalationEvent, EscalationState, GoalKind,
    GoalMsg, GoalState, GoalStatusEntry, Knowledge, MapDigest, Message, MonitorConfig, ObservationKind, ObservationMsg,
    Plan, Rejection, StepKind, StepStatus, BROADCAST,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecConfig {
    pub level: AutonomyLevel,
    pub replan_ticks: u64,
    pub planner: PlannerConfig,
    pub follow: FollowConfig,
    pub monitor: MonitorConfig,
    pub inspection: InspectionConfig,
    pub emergency: EmergencyConfig,
    pub tracker: TrackerConfig,
    pub locate: LocateConfig,
    pub integrate: IntegrateConfig,
    pub ack_timeout_ticks: u64,
    pub rover_radius: f64,
    pub tool_phase_ticks: u64,
    pub scoop_ticks: u64,
    pub transfer_ticks: u64,
    pub wait_timeout_ticks: u64,
    pub nav_timeout_ticks: u64,
    pub nav_max_failures: u32,
    pub heading_tolerance: f64,
    /// Lock failures injected at the Docked phase of the next tool assemblies.
    pub lock_failures: u32,
    pub sample_priority_boost: i32,
    /// Supervision reminders before the step gives up.
    pub max_reminders: u32,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            level: AutonomyLevel::E4,
            replan_ticks: 30,
            planner: PlannerConfig::default(),
            follow: FollowConfig::default(),
            monitor: MonitorConfig::default(),
            inspection: InspectionConfig::default(),
            emergency: EmergencyConfig::default(),
            tracker: TrackerConfig::default(),
            locate: LocateConfig::default(),
            integrate: IntegrateConfig::default(),
            ack_timeout_ticks: 300,
            rover_radius: 0.25,
            tool_phase_ticks: 10,
            scoop_ticks: 20,
            transfer_ticks: 15,
            wait_timeout_ticks: 1500,
            nav_timeout_ticks: 3000,
            nav_max_failures: 5,
            heading_tolerance: 0.1,
            lock_failures: 0,
            sample_priority_boost: 10,
            max_reminders: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Queued {
    pub plan: Plan,
    pub seq: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeerState {
    pub pose: Option<Pose2>,
    pub pose_tick: u64,
    pub heartbeat: Option<u64>,
}

/// Per-step scratch state, reset whenever a step starts.
#[derive(Debug, Clone, Default)]
struct StepRt {
    started: u64,
    timer: u64,
    path: Option<Path>,
    last_plan: Option<u64>,
    failures: u32,
    capture: Option<PanelCapture>,
    reminders: u32,
    notified: BTreeSet<u32>,
    begun: bool,
}

enum Outcome {
    Running,
    Finished(bool),
}

/// One line of agent-level trace, without tick and source.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentNote {
    pub kind: String,
    pub payload: Value,
}

/// Results of one frame through the agent's perception stack.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionOutput {
    pub replay: ReplayFrame,
    pub track_ids: Vec<u64>,
    pub events: Vec<PerceptionEvent>,
}

#[derive(Debug, Clone, Default)]
pub struct AgentOutput {
    pub outbox: Vec<Envelope>,
    pub notes: Vec<AgentNote>,
    /// Commanded `(v, omega)`.
    pub cmd: (f64, f64),
}

/// Goal-driven rover controller: queue, plan execution, perception, mapping,
/// peer exchange and astronaut monitoring.
#[derive(Debug, Clone)]
pub struct RoverExecutive {
    pub knowledge: Knowledge,
    pub config: ExecConfig,
    pub pose: Pose2,
    pub queue: Vec<Queued>,
    pub active: Option<Queued>,
    pub statuses: BTreeMap<String, GoalStatusEntry>,
    pub peer_statuses: BTreeMap<String, GoalStatusEntry>,
    pub peers: BTreeMap<String, PeerState>,
    pub peer_maps: BTreeMap<String, OccupancyGrid>,
    pub map: OccupancyGrid,
    pub tracker: Tracker,
    pub tool: ToolState,
    pub sample: Option<SampleOp>,
    pub escalation: Option<EscalationState>,
    pub panel_records: BTreeMap<String, Vec<PanelRecord>>,
    seq: u64,
    internal_goals: u64,
    rt: StepRt,
    fall: FallDetector,
    episodes: EpisodeFilter,
    latch: EdgeLatch,
    frame: Option<SensorFrame>,
    interactions: Vec<PerceptionEvent>,
    falls: Vec<PerceptionEvent>,
    monitor_since: Option<u64>,
    lock_failures_left: u32,
    out: AgentOutput,
}

fn note(kind: &str, payload: Value) -> AgentNote {
    AgentNote {
        kind: kind.to_string(),
        payload,
    }
}

impl RoverExecutive {
    pub fn new(knowledge: Knowledge, config: ExecConfig, pose: Pose2, map_geometry: GridGeometry) -> Self {
        let tracker = Tracker::new(config.tracker.clone()).expect("tracker config validated by scenario");
        let escalation = knowledge
            .astronaut
            .as_ref()
            .map(|a| EscalationState::new(a.clone(), config.ack_timeout_ticks));
        RoverExecutive {
            map: OccupancyGrid::new(map_geometry, "map"),
            lock_failures_left: config.lock_failures,
            knowledge,
            config,
            pose,
            queue: Vec::new(),
            active: None,
            statuses: BTreeMap::new(),
            peer_statuses: BTreeMap::new(),
            peers: BTreeMap::new(),
            peer_maps: BTreeMap::new(),
            tracker,
            tool: ToolState::default(),
            sample: None,
            escalation,
            panel_records: BTreeMap::new(),
            seq: 0,
            internal_goals: 0,
            rt: StepRt::default(),
            fall: FallDetector::new(),
            episodes: EpisodeFilter::default(),
            latch: EdgeLatch::default(),
            frame: None,
            interactions: Vec::new(),
            falls: Vec::new(),
            monitor_since: None,
            out: AgentOutput::default(),
        }
    }

    pub fn id(&self) -> &str {
        &self.knowledge.agent
    }

    // ---- perception and mapping ----

    /// Locates and tracks the frame's detections and derives perception events.
    pub fn perceive(&mut self, frame: &SensorFrame) -> PerceptionOutput {
        let roi_depths = frame_roi_depths(frame, &self.config.locate);
        let located = locate_with_depths(&frame.rgb_detections, &roi_depths, &frame.camera, &self.config.locate);
        let inputs: Vec<TrackInput> = located
            .iter()
            .filter(|l| l.raw.class_label.is_trackable())
            .map(TrackInput::from)
            .collect();
        let tracks = self.tracker.step(&inputs, frame.tick).expect("frames arrive in tick order").to_vec();
        let track_ids = self.tracker.last_assignments.clone();
        let cfg = &self.config.emergency;
        self.interactions = detect_interaction(&tracks, cfg, frame.tick);
        let mut raw = self.interactions.clone();
        raw.extend(detect_hazard_proximity(&tracks, cfg, frame.tick));
        let mut events = self.episodes.filter(raw);
        self.falls = tracks.iter().filter_map(|t| self.fall.check(t, cfg)).collect();
        events.extend(self.falls.iter().cloned());
        self.frame = Some(frame.clone());
        PerceptionOutput {
            replay: ReplayFrame {
                agent: frame.agent_id.clone(),
                tick: frame.tick,
                detections: frame.rgb_detections.clone(),
                depth_ref: DepthRef {
                    camera: frame.camera.clone(),
                    roi_depths,
                },
            },
            track_ids,
            events,
        }
    }

    /// Masks the frame's depth with its segmentation and integrates it into the own map.
    pub fn integrate(&mut self, frame: &SensorFrame, ground: &dyn GroundHeight) {
        if let Ok(masked) = mask_depth(&frame.depth, &frame.seg_mask) {
            // a camera outside the map contributes nothing
            let _ = integrate_depth_in_place(&mut self.map, &masked, &frame.camera, ground, &self.config.integrate);
        }
    }

    /// Own map fused with the latest peer digests, plus peer discs, safety
    /// zones, and the rover's own footprint cleared.
    pub fn costmap(&self) -> OccupancyGrid {
        let mut g = self.map.clone();
        for d in self.peer_maps.values() {
            if let Ok(f) = fuse_maps(&g, d, Se2::default()) {
                g = f;
            }
        }
        for pose in self.peers.values().filter_map(|p| p.pose) {
            g.stamp_disc(pose.position(), 2.0 * self.config.rover_radius);
        }
        if let Some(w) = self.worksite() {
            stamp_safe_zone(&mut g, w, &self.config.monitor);
        }
        let geo = g.geometry;
        let (ci, cj) = geo.cell_coords(self.pose.position());
        let r = (self.config.rover_radius / geo.resolution).ceil() as i64 + 1;
        for j in cj - r..=cj + r {
            for i in ci - r..=ci + r {
                if geo.in_bounds(i, j) {
                    let c = geo.cell_center(i as usize, j as usize);
                    if self.pose.distance_to(c) <= self.config.rover_radius + geo.resolution {
                        g.set(i as usize, j as usize, g.clamp[0]);
                    }
                }
            }
        }
        g
    }

    /// Worksite of the active repair plan.
    pub fn worksite(&self) -> Option<[f64; 2]> {
        let q = self.active.as_ref()?;
        if q.plan.kind != GoalKind::RepairPanel {
            return None;
        }
        q.plan.steps.iter().find_map(|s| match &s.kind {
            StepKind::Supervise { tag_id, .. } => self.repair_site(*tag_id).map(|(w, _, _)| w),
            _ => None,
        })
    }

    fn repair_site(&self, tag: u32) -> Option<([f64; 2], [f64; 2], f64)> {
        self.knowledge.racks.iter().find_map(|r| {
            r.tag_ids
                .iter()
                .position(|t| *t == tag)
                .map(|i| repair_geometry(r, i, &self.knowledge.tuning))
        })
    }

    // ---- goal intake and scheduling ----

    fn send(&mut self, to: &str, reliable: bool, message: Message) {
        self.out.outbox.push(Envelope {
            msg_id: 0,
            from: self.knowledge.agent.clone(),
            to: to.to_string(),
            reliable,
            message,
        });
    }

    fn observe(&mut self, to: &str, reliable: bool, tick: u64, kind: ObservationKind, payload: Value) {
        let msg = Message::Observation(ObservationMsg {
            source: self.knowledge.agent.clone(),
            tick,
            kind,
            payload,
        });
        self.send(to, reliable, msg);
    }

    fn set_status(&mut self, goal_id: &str, state: GoalState, reason: Option<String>, issuer: Option<&str>, tick: u64) {
        let entry = GoalStatusEntry { state, reason };
        self.statuses.insert(goal_id.to_string(), entry.clone());
        self.out.notes.push(note("goal_status", json!({"goal_id": goal_id, "status": entry})));
        if let Some(to) = issuer {
            if to != self.knowledge.agent && (state.is_terminal() || state == GoalState::Accepted) {
                let payload = json!({"goals": {goal_id: entry}});
                self.observe(to, true, tick, ObservationKind::GoalStatus, payload);
            }
        }
    }

    /// Autonomy gate and decomposition; accepted plans join the queue.
    pub fn submit_goal(&mut self, goal: &GoalMsg, tick: u64) -> Result<(), Rejection> {
        self.out.notes.push(note("goal_received", json!(goal)));
        if self.statuses.contains_key(&goal.goal_id) {
            return Ok(());
        }
        match accept_goal(self.config.level, goal, &self.knowledge) {
            Ok(plan) => {
                let steps: Vec<&str> = plan.steps.iter().map(|s| s.kind.name()).collect();
                self.out.notes.push(note(
                    "goal_accepted",
                    json!({"goal_id": goal.goal_id, "kind": goal.kind, "priority": goal.priority, "steps": steps}),
                ));
                self.seq += 1;
                self.queue.push(Queued { plan, seq: self.seq });
                self.set_status(&goal.goal_id, GoalState::Accepted, None, Some(&goal.issuer), tick);
                Ok(())
            }
            Err(r) => {
                self.out
                    .notes
                    .push(note("goal_rejected", json!({"goal_id": goal.goal_id, "reason": r.to_string()})));
                self.set_status(&goal.goal_id, GoalState::Rejected, Some(r.to_string()), Some(&goal.issuer), tick);
                Err(r)
            }
        }
    }

    fn best_queued(&self) -> Option<usize> {
        (0..self.queue.len()).max_by(|a, b| {
            let (qa, qb) = (&self.queue[*a], &self.queue[*b]);
            qa.plan.priority.cmp(&qb.plan.priority).then(qb.seq.cmp(&qa.seq))
        })
    }

    fn schedule(&mut self, tick: u64) {
        let Some(best) = self.best_queued() else { return };
        if let Some(a) = &self.active {
            if self.queue[best].plan.priority <= a.plan.priority {
                return;
            }
            let mut a = self.active.take().expect("checked");
            let step = a.plan.suspend();
            self.rt = StepRt::default();
            let pending = a.plan.pending_indices();
            self.out.notes.push(note(
                "plan_suspended",
                json!({"goal_id": a.plan.goal_id, "step": step, "pending": pending}),
            ));
            let issuer = a.plan.issuer.clone();
            self.set_status(&a.plan.goal_id, GoalState::Suspended, None, Some(&issuer), tick);
            self.queue.push(a);
        }
        let q = self.queue.remove(self.best_queued().expect("non-empty"));
        let resumed = q.plan.steps.iter().any(|s| s.status == StepStatus::Suspended);
        if resumed {
            self.out.notes.push(note(
                "plan_resumed",
                json!({"goal_id": q.plan.goal_id, "next_step": q.plan.next_pending()}),
            ));
        }
        let (goal_id, issuer) = (q.plan.goal_id.clone(), q.plan.issuer.clone());
        self.active = Some(q);
        self.rt = StepRt::default();
        self.set_status(&goal_id, GoalState::Active, None, Some(&issuer), tick);
    }

    /// Plan adaptation on observations. An interesting zone during exploration
    /// (or while idle) inserts a cooperative sampling goal above the current one.
    pub fn adapt_plan(&mut self, obs: &ObservationMsg, tick: u64) {
        if obs.kind != ObservationKind::InterestingZone {
            return;
        }
        let active_kind = self.active.as_ref().map(|q| q.plan.kind);
        if !matches!(active_kind, None | Some(GoalKind::ExploreRegion)) {
            self.out
                .notes
                .push(note("zone_ignored", json!({"reason": "busy", "active": active_kind})));
            return;
        }
        let Some(point) = obs.payload.get("point").and_then(|p| serde_json::from_value::<[f64; 2]>(p.clone()).ok())
        else {
            return;
        };
        let base = self.active.as_ref().map(|q| q.plan.priority).unwrap_or(0);
        let (s, c) = self.pose.heading.sin_cos();
        let off = self.knowledge.tuning.park_offset;
        let park = [point[0] - s * off, point[1] + c * off];
        self.internal_goals += 1;
        let goal = GoalMsg {
            goal_id: format!("{}-sample-{}", self.knowledge.agent, self.internal_goals),
            issuer: self.knowledge.agent.clone(),
            target: self.knowledge.agent.clone(),
            level: AutonomyLevel::E4,
            kind: GoalKind::CollectSample,
            params: BTreeMap::from([
                ("point".to_string(), json!(point)),
                ("park".to_string(), json!(park)),
                ("role".to_string(), json!("sampler")),
            ]),
            priority: base + self.config.sample_priority_boost,
        };
        self.out
            .notes
            .push(note("zone_adapted", json!({"point": point, "goal_id": goal.goal_id})));
        let _ = self.submit_goal(&goal, tick);
    }

    // ---- inbox ----

    fn handle(&mut self, env: Envelope, tick: u64) {
        match env.message {
            Message::Goal(g) => {
                if g.target == self.knowledge.agent {
                    let _ = self.submit_goal(&g, tick);
                }
            }
            Message::Observation(o) => self.consume(o, tick),
        }
    }

    fn consume(&mut self, o: ObservationMsg, tick: u64) {
        match o.kind {
            ObservationKind::Pose => {
                if let Ok(p) = serde_json::from_value::<Pose2>(o.payload.clone()) {
                    let peer = self.peers.entry(o.source.clone()).or_default();
                    if o.tick >= peer.pose_tick {
                        peer.pose = Some(p);
                        peer.pose_tick = o.tick;
                    }
                }
            }
            ObservationKind::Heartbeat => {
                let peer = self.peers.entry(o.source.clone()).or_default();
                peer.heartbeat = Some(peer.heartbeat.unwrap_or(0).max(o.tick));
            }
            ObservationKind::GoalStatus => {
                if let Some(goals) = o.payload.get("goals").and_then(|g| g.as_object()) {
                    for (id, e) in goals {
                        let Ok(e) = serde_json::from_value::<GoalStatusEntry>(e.clone()) else { continue };
                        let known_terminal = self.peer_statuses.get(id).is_some_and(|x| x.state.is_terminal());
                        if !known_terminal {
                            self.peer_statuses.insert(id.clone(), e);
                        }
                    }
                }
            }
            ObservationKind::MapDigest => {
                if let Ok(d) = serde_json::from_value::<MapDigest>(o.payload.clone()) {
                    if let Ok(g) = d.to_grid() {
                        self.out.notes.push(note("map_fused", json!({"from": o.source})));
                        self.peer_maps.insert(o.source.clone(), g);
                    }
                }
            }
            ObservationKind::AstronautReply => {
                let reply = serde_json::from_value::<AstronautReply>(o.payload.get("reply").cloned().unwrap_or(o.payload.clone()));
                match reply {
                    Ok(AstronautReply::Ok) => self.escalate_event(EscalationEvent::ReplyOk, tick),
                    Ok(AstronautReply::Help) => self.escalate_event(EscalationEvent::ReplyHelp, tick),
                    Err(_) => {}
                }
            }
            ObservationKind::InterestingZone => self.adapt_plan(&o, tick),
            ObservationKind::Notification => {
                if o.payload.get("command").and_then(|c| c.as_str()) == Some("reset_escalation") {
                    self.escalate_event(EscalationEvent::Reset, tick);
                }
            }
            ObservationKind::Detection
            | ObservationKind::PanelReport
            | ObservationKind::Emergency => {}
        }
    }

    // ---- escalation ----

    fn escalate_event(&mut self, event: EscalationEvent, tick: u64) {
        let Some(state) = self.escalation.clone() else { return };
        let (next, action) = escalate(&state, event, tick);
        if next.phase != state.phase || action.is_some() {
            self.out.notes.push(note(
                "escalation",
                json!({"from": state.phase, "to": next.phase, "event": event, "action": action}),
            ));
        }
        let subject = next.subject.clone();
        self.escalation = Some(next);
        match action {
            Some(EscalationAction::AlertAstronaut { cause }) => {
                self.observe(
                    &subject,
                    true,
                    tick,
                    ObservationKind::Notification,
                    json!({"kind": "alert", "cause": cause, "text": "Are you OK? Reply OK or HELP"}),
                );
            }
            Some(EscalationAction::NotifyControl { cause, help }) => {
                let control = self.knowledge.control.clone();
                self.observe(
                    &control,
                    true,
                    tick,
                    ObservationKind::Emergency,
                    json!({"subject": subject, "cause": cause, "help": help, "pose": self.pose}),
                );
            }
            None => {}
        }
    }

    fn monitor(&mut self, tick: u64) {
        if self.escalation.is_none() {
            return;
        }
        let mut onsets: Vec<EmergencyKind> = Vec::new();
        if !self.falls.is_empty() {
            onsets.push(EmergencyKind::AstronautFall);
            self.falls.clear();
        }
        let astronaut = self.knowledge.astronaut.clone().unwrap_or_default();
        let expected = self.worksite();
        let level = if expected.is_some() {
            let since = *self.monitor_since.get_or_insert(tick);
            let peer = self.peers.get(&astronaut).cloned().unwrap_or_default();
            let hb = Some(peer.heartbeat.unwrap_or(since).max(since));
            monitor_astronaut(
                self.tracker.tracks(),
                peer.pose.map(|p| p.position()),
                expected,
                hb,
                tick,
                &self.config.monitor,
            )
        } else {
            self.monitor_since = None;
            Vec::new()
        };
        onsets.extend(self.latch.rising(&level));
        for kind in onsets {
            self.out.notes.push(note("emergency", json!({"kind": kind})));
            self.escalate_event(EscalationEvent::Emergency { kind }, tick);
        }
        self.escalate_event(EscalationEvent::Tick, tick);
    }

    pub fn operator_reset(&mut self, tick: u64) {
        self.escalate_event(EscalationEvent::Reset, tick);
    }

    // ---- step execution ----

    fn peer_pose(&self, id: &str) -> Option<Pose2> {
        self.peers.get(id).and_then(|p| p.pose)
    }

    fn navigate(&mut self, tick: u64, goal: [f64; 2], tol: f64, heading: Option<f64>) -> Outcome {
        let d = self.pose.distance_to(goal);
        if d <= tol {
            let Some(h) = heading else { return Outcome::Finished(true) };
            let err = wrap_angle(h - self.pose.heading);
            if err.abs() <= self.config.heading_tolerance {
                return Outcome::Finished(true);
            }
            self.out.cmd = (0.0, (self.config.follow.k_heading * err).clamp(-1.0, 1.0));
            return Outcome::Running;
        }
        if tick.saturating_sub(self.rt.started) > self.config.nav_timeout_ticks {
            self.out.notes.push(note("nav_timeout", json!({"goal": goal})));
            return Outcome::Finished(false);
        }
        let due = self
            .rt
            .last_plan
            .is_none_or(|t| tick.saturating_sub(t) >= self.config.replan_ticks);
        if due {
            self.rt.last_plan = Some(tick);
            match plan_path(&self.costmap(), self.pose.position(), goal, &self.config.planner) {
                Ok(p) => {
                    self.out.notes.push(note(
                        "path_planned",
                        json!({"goal": goal, "length": p.length, "min_clearance": p.min_clearance, "waypoints": p.waypoints.len()}),
                    ));
                    self.rt.path = Some(p);
                }
                Err(e) => {
                    self.rt.failures += 1;
                    self.out
                        .notes
                        .push(note("path_failed", json!({"goal": goal, "error": e.to_string()})));
                    if self.rt.failures >= self.config.nav_max_failures {
                        return Outcome::Finished(false);
                    }
                }
            }
        }
        let Some(path) = &self.rt.path else {
            self.out.cmd = (0.0, 0.0);
            return Outcome::Running;
        };
        let fc = &self.config.follow;
        let bearing = (goal[1] - self.pose.y).atan2(goal[0] - self.pose.x);
        let err = wrap_angle(bearing - self.pose.heading);
        self.out.cmd = if d < fc.lookahead {
            // final approach: turn on the spot, then creep in
            if err.abs() > 0.35 {
                (0.0, (fc.k_heading * err).clamp(-1.0, 1.0))
            } else {
                ((0.8 * d).clamp(0.05, fc.v_max), fc.k_heading * err)
            }
        } else {
            let cfg = FollowConfig {
                goal_tolerance: tol,
                ..*fc
            };
            follow(&path.waypoints, &self.pose, &cfg)
        };
        Outcome::Running
    }

    fn sample_fault(&mut self, cause: AbortCause) {
        if let Some(op) = &mut self.sample {
            if !op.phase.is_terminal() {
                let ctx = SampleContext {
                    tool: self.tool,
                    container_distance: f64::INFINITY,
                };
                let _ = op.apply(SampleEvent::Fault(cause), &ctx);
                self.out.notes.push(note("sample_phase", json!({"phase": op.phase})));
            }
        }
    }

    fn sample_event(&mut self, event: SampleEvent, container_distance: f64) -> Result<(), String> {
        let ctx = SampleContext {
            tool: self.tool,
            container_distance,
        };
        let op = self.sample.as_mut().ok_or("no sampling operation")?;
        op.apply(event, &ctx).map_err(|e| e.to_string())?;
        let phase = op.phase.clone();
        self.out.notes.push(note("sample_phase", json!({"phase": phase})));
        Ok(())
    }

    fn exec_step(&mut self, tick: u64, kind: &StepKind) -> Outcome {
        let first = !self.rt.begun;
        self.rt.begun = true;
        if first {
            self.rt.started = tick;
            self.rt.timer = tick;
        }
        let elapsed = tick - self.rt.timer;
        match kind {
            StepKind::NavigateTo {
                point,
                tolerance,
                heading,
            } => self.navigate(tick, *point, *tolerance, *heading),
            StepKind::PublishMapDigest => {
                let d = MapDigest::from_grid(&self.map);
                self.observe(BROADCAST, true, tick, ObservationKind::MapDigest, json!(d));
                Outcome::Finished(true)
            }
            StepKind::InspectPanel { rack_id, index, tag_id } => {
                let cap = self.rt.capture.get_or_insert_with(|| PanelCapture::new(*tag_id));
                let Some(frame) = self.frame.clone().filter(|f| f.tick == tick) else {
                    return Outcome::Running;
                };
                if !cap.offer(frame, &self.config.inspection) {
                    return Outcome::Running;
                }
                let Some(rack) = self.knowledge.racks.iter().find(|r| &r.rack_id == rack_id) else {
                    return Outcome::Finished(false);
                };
                let record = cap.finish(&rack.geometry(*index), &self.config.inspection);
                self.out.notes.push(note("panel_record", json!({"rack_id": rack_id, "record": record})));
                let recs = self.panel_records.entry(rack_id.clone()).or_default();
                recs.retain(|r| r.tag_id != *tag_id);
                recs.push(record);
                Outcome::Finished(true)
            }
            StepKind::PublishPanelReport { rack_id } => {
                let report = InspectionReport {
                    rack_id: rack_id.clone(),
                    records: self.panel_records.get(rack_id).cloned().unwrap_or_default(),
                };
                let control = self.knowledge.control.clone();
                self.observe(&control, true, tick, ObservationKind::PanelReport, json!(report));
                if self.knowledge.astronaut.is_some() {
                    let priority = self.active.as_ref().map(|q| q.plan.priority).unwrap_or(0);
                    for r in report.records.iter().filter(|r| r.verdict == Verdict::Cracked) {
                        let goal = GoalMsg {
                            goal_id: format!("{}-repair-{}", self.knowledge.agent, r.tag_id),
                            issuer: self.knowledge.agent.clone(),
                            target: self.knowledge.agent.clone(),
                            level: AutonomyLevel::E4,
                            kind: GoalKind::RepairPanel,
                            params: BTreeMap::from([("tag_id".to_string(), json!(r.tag_id))]),
                            priority,
                        };
                        self.out
                            .notes
                            .push(note("repair_issued", json!({"goal_id": goal.goal_id, "tag_id": r.tag_id})));
                        let _ = self.submit_goal(&goal, tick);
                    }
                }
                Outcome::Finished(true)
            }
            StepKind::SendGoal { goal } => {
                self.out.notes.push(note("goal_sent", json!(goal)));
                self.send(&goal.target.clone(), true, Message::Goal(goal.clone()));
                Outcome::Finished(true)
            }
            StepKind::Rendezvous { peer, point, radius } => {
                self.out.cmd = (0.0, 0.0);
                let container_goal = self.active.as_ref().map(|q| format!("{}/container", q.plan.goal_id));
                if let Some(s) = container_goal.and_then(|g| self.peer_statuses.get(&g)) {
                    if matches!(s.state, GoalState::Failed | GoalState::Rejected) {
                        return Outcome::Finished(false);
                    }
                }
                if self.peer_pose(peer).is_some_and(|p| p.distance_to(*point) <= *radius) {
                    return Outcome::Finished(true);
                }
                if tick - self.rt.started > self.config.wait_timeout_ticks {
                    return Outcome::Finished(false);
                }
                Outcome::Running
            }
            StepKind::ToolChange { tool } => self.tool_change(tick, *tool, first, elapsed),
            StepKind::MoveToSite { point } => {
                let tol = self.knowledge.tuning.precise_tolerance;
                match self.navigate(tick, *point, tol, None) {
                    Outcome::Finished(true) => {
                        self.out.cmd = (0.0, 0.0);
                        match self.sample_event(SampleEvent::Arrived, f64::INFINITY) {
                            Ok(()) => Outcome::Finished(true),
                            Err(e) => {
                                self.out.notes.push(note("sample_error", json!(e)));
                                self.sample_fault(AbortCause::Tool);
                                Outcome::Finished(false)
                            }
                        }
                    }
                    Outcome::Finished(false) => {
                        self.sample_fault(AbortCause::Planner);
                        Outcome::Finished(false)
                    }
                    Outcome::Running => Outcome::Running,
                }
            }
            StepKind::Scoop => {
                self.out.cmd = (0.0, 0.0);
                if elapsed < self.config.scoop_ticks {
                    return Outcome::Running;
                }
                match self.sample_event(SampleEvent::ScoopComplete, f64::INFINITY) {
                    Ok(()) => Outcome::Finished(true),
                    Err(_) => Outcome::Finished(false),
                }
            }
            StepKind::Transfer { container } => {
                self.out.cmd = (0.0, 0.0);
                let dist = self
                    .peer_pose(container)
                    .map(|p| p.distance_to(self.pose.position()))
                    .unwrap_or(f64::INFINITY);
                let in_range = self
                    .sample
                    .as_ref()
                    .is_some_and(|op| op.check_range(&SampleContext { tool: self.tool, container_distance: dist }).is_ok());
                if !in_range {
                    self.rt.timer = tick;
                    if tick - self.rt.started > self.config.wait_timeout_ticks {
                        self.sample_fault(AbortCause::Container);
                        return Outcome::Finished(false);
                    }
                    return Outcome::Running;
                }
                if elapsed < self.config.transfer_ticks {
                    return Outcome::Running;
                }
                match self.sample_event(SampleEvent::TransferComplete, dist) {
                    Ok(()) => {
                        self.out.notes.push(note(
                            "sample_stored",
                            json!({"goal_id": self.active.as_ref().map(|q| q.plan.goal_id.clone()), "container": container}),
                        ));
                        Outcome::Finished(true)
                    }
                    Err(_) => Outcome::Finished(false),
                }
            }
            StepKind::ResumeHook => {
                if self.sample.as_ref().is_some_and(|op| !op.phase.is_terminal()) {
                    self.sample_fault(AbortCause::Other("plan aborted".into()));
                }
                let phase = self.sample.take().map(|op| op.phase);
                self.out.notes.push(note("sample_terminal", json!({"phase": phase})));
                Outcome::Finished(true)
            }
            StepKind::HoldForTransfer { sample_goal, .. } => {
                self.out.cmd = (0.0, 0.0);
                match self.peer_statuses.get(sample_goal).map(|s| s.state) {
                    Some(s) if s.is_terminal() => Outcome::Finished(true),
                    _ if tick - self.rt.started > 4 * self.config.wait_timeout_ticks => Outcome::Finished(false),
                    _ => Outcome::Running,
                }
            }
            StepKind::Supervise { astronaut, tag_id } => {
                self.out.cmd = (0.0, 0.0);
                let panels: Vec<(u32, [f64; 2])> = self
                    .knowledge
                    .racks
                    .iter()
                    .flat_map(|r| r.tag_ids.iter().copied().zip(r.panel_poses.iter().map(|p| p.position())))
                    .collect();
                let sup = supervise_task(&self.interactions, self.tracker.tracks(), &panels, *tag_id, &self.config.monitor);
                for wrong in sup.wrong_tags {
                    if self.rt.notified.insert(wrong) {
                        let payload = json!({"kind": "wrong_target", "expected_tag": tag_id, "observed_tag": wrong});
                        self.out.notes.push(note("notification", json!({"to": astronaut, "body": payload})));
                        self.observe(astronaut, true, tick, ObservationKind::Notification, payload);
                    }
                }
                if sup.correct {
                    self.out.notes.push(note("supervision_done", json!({"tag_id": tag_id})));
                    return Outcome::Finished(true);
                }
                if elapsed >= self.config.monitor.supervise_timeout_ticks {
                    self.rt.timer = tick;
                    self.rt.reminders += 1;
                    if self.rt.reminders > self.config.max_reminders {
                        return Outcome::Finished(false);
                    }
                    let payload = json!({"kind": "reminder", "tag_id": tag_id});
                    self.out.notes.push(note("notification", json!({"to": astronaut, "body": payload})));
                    self.observe(astronaut, true, tick, ObservationKind::Notification, payload);
                }
                Outcome::Running
            }
            StepKind::AwaitRepair { goal_id, .. } => {
                self.out.cmd = (0.0, 0.0);
                match self.peer_statuses.get(goal_id).map(|s| s.state) {
                    Some(GoalState::Done) => Outcome::Finished(true),
                    Some(s) if s.is_terminal() => Outcome::Finished(false),
                    _ => Outcome::Running,
                }
            }
        }
    }

    fn tool_change(&mut self, tick: u64, tool: Tool, first: bool, elapsed: u64) -> Outcome {
        self.out.cmd = (0.0, 0.0);
        if first {
            let point = self.active.as_ref().and_then(|q| {
                q.plan.steps.iter().find_map(|s| match &s.kind {
                    StepKind::MoveToSite { point } => Some(*point),
                    _ => None,
                })
            });
            let container = self.active.as_ref().and_then(|q| {
                q.plan.steps.iter().find_map(|s| match &s.kind {
                    StepKind::Transfer { container } => Some(container.clone()),
                    _ => None,
                })
            });
            if let (Some(p), Some(c)) = (point, container) {
                let (op, cmd) = SampleOp::start(p, c, &self.tool);
                self.out.notes.push(note("sample_started", json!({"op": op, "command": cmd})));
                self.sample = Some(op);
            }
            if self.tool.is_ready(tool) {
                return Outcome::Finished(true);
            }
            let input = ToolInput::Assemble(tool);
            if let Err(e) = self.tool.apply(input) {
                self.out.notes.push(note("tool_error", json!(e.to_string())));
                self.sample_fault(AbortCause::Tool);
                return Outcome::Finished(false);
            }
            self.out.notes.push(note("tool", json!({"input": input, "state": self.tool})));
            return Outcome::Running;
        }
        if elapsed < self.config.tool_phase_ticks {
            return Outcome::Running;
        }
        self.rt.timer = tick;
        let input = if self.tool.phase == ToolPhase::Docked && self.lock_failures_left > 0 {
            self.lock_failures_left -= 1;
            ToolInput::LockFailure
        } else {
            ToolInput::Success
        };
        let res = self.tool.apply(input);
        self.out.notes.push(note("tool", json!({"input": input, "state": self.tool})));
        match res {
            Ok(()) if self.tool.is_ready(tool) => {
                let _ = self.sample_event(SampleEvent::ToolVerified, f64::INFINITY);
                Outcome::Finished(true)
            }
            Ok(()) => Outcome::Running,
            Err(ToolError::LockFailedPermanently { retries }) => {
                self.out.notes.push(note("tool_error", json!({"lock_failed": retries})));
                self.sample_fault(AbortCause::Tool);
                Outcome::Finished(false)
            }
            Err(e) => {
                self.out.notes.push(note("tool_error", json!(e.to_string())));
                self.sample_fault(AbortCause::Tool);
                Outcome::Finished(false)
            }
        }
    }

    fn run_plans(&mut self, tick: u64) {
        for _ in 0..32 {
            self.schedule(tick);
            let Some(q) = self.active.as_mut() else { return };
            let k = match q.plan.active_index() {
                Some(k) => k,
                None => match q.plan.activate_next() {
                    Some(k) => {
                        self.rt = StepRt::default();
                        let (goal_id, name) = (q.plan.goal_id.clone(), q.plan.steps[k].kind.name());
                        self.out
                            .notes
                            .push(note("step", json!({"goal_id": goal_id, "index": k, "step": name, "status": "active"})));
                        k
                    }
                    None => {
                        let q = self.active.take().expect("checked");
                        let state = if q.plan.succeeded() { GoalState::Done } else { GoalState::Failed };
                        self.set_status(&q.plan.goal_id, state, None, Some(&q.plan.issuer), tick);
                        self.out.cmd = (0.0, 0.0);
                        continue;
                    }
                },
            };
            let kind = q.plan.steps[k].kind.clone();
            match self.exec_step(tick, &kind) {
                Outcome::Running => return,
                Outcome::Finished(ok) => {
                    let q = self.active.as_mut().expect("step ran on the active plan");
                    q.plan.finish_active(ok);
                    let goal_id = q.plan.goal_id.clone();
                    let status = if ok { "done" } else { "failed" };
                    self.out.notes.push(note(
                        "step",
                        json!({"goal_id": goal_id, "index": k, "step": kind.name(), "status": status}),
                    ));
                    self.rt = StepRt::default();
                }
            }
        }
    }

    /// One control cycle: consume the inbox, monitor, run plans and publish
    /// pose, heartbeat and goal status.
    pub fn tick(&mut self, tick: u64, pose: Pose2, inbox: Vec<Envelope>) -> AgentOutput {
        self.out = AgentOutput::default();
        self.pose = pose;
        for env in inbox {
            self.handle(env, tick);
        }
        self.run_plans(tick);
        self.monitor(tick);
        self.observe(BROADCAST, false, tick, ObservationKind::Pose, json!(self.pose));
        self.observe(BROADCAST, false, tick, ObservationKind::Heartbeat, Value::Null);
        self.observe(BROADCAST, false, tick, ObservationKind::GoalStatus, json!({"goals": self.statuses}));
        std::mem::take(&mut self.out)
    }

    /// Index of the active plan's running step.
    pub fn active_step(&self) -> Option<(String, usize)> {
        let q = self.active.as_ref()?;
        Some((q.plan.goal_id.clone(), q.plan.active_index()?))
    }

    /// True when no plan is running or queued.
    pub fn idle(&self) -> bool {
        self.active.is_none() && self.queue.is_empty()
    }

    pub fn tool_state(&self) -> &ToolState {
        &self.tool
    }

    pub fn set_pose(&mut self, pose: Pose2) {
        self.pose = pose;
    }
}
