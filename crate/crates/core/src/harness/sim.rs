use std::collections::BTreeMap;
use std::time::Instant;

use serde_json::{json, Value};

use crate::executive::{Bus, BusEvent, Dedupe, Envelope, Knowledge, ObservationKind, ObservationMsg, RoverExecutive};
use crate::geometry::{dist2, Pose2, Se2};
use crate::navmap::{fuse_maps, GridGeometry};
use crate::world::{EntityState, World};

use super::astronaut::AstronautAgent;
use super::control::ControlAgent;
use super::metrics::{metrics, MissionReport};
use super::scenario::{Scenario, ScenarioInvalid};
use super::trace::{TraceError, TraceEvent};

pub const CONTROL_ID: &str = "control";
const HARNESS: &str = "harness";
/// Rovers stop rather than close in below this centre distance.
const SAFETY_DISTANCE: f64 = 0.6;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scenario(#[from] ScenarioInvalid),
    #[error("world: {0}")]
    World(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceEvent>,
    pub report: MissionReport,
    pub world: World,
}

/// A scenario in progress. [`Sim::step`] advances one tick.
pub struct Sim {
    pub scenario: Scenario,
    pub world: World,
    pub bus: Bus,
    pub rovers: Vec<RoverExecutive>,
    pub astronaut: Option<AstronautAgent>,
    pub control: ControlAgent,
    dedupe: BTreeMap<String, Dedupe>,
    pub trace: Vec<TraceEvent>,
    pub tick: u64,
    finished: bool,
}

impl Sim {
    pub fn new(scenario: &Scenario) -> Result<Sim, HarnessError> {
        scenario.validate()?;
        let world = scenario.build_world().map_err(HarnessError::World)?;
        let [w, h] = world.terrain.extent();
        let geometry = GridGeometry::new(world.terrain.width, world.terrain.height, world.terrain.resolution, [0.0, 0.0]);
        let rover_ids = scenario.rover_ids();
        let astronaut_id = scenario.astronaut_id();
        let mut rovers = Vec::new();
        for id in &rover_ids {
            let pose = world.entity(id).map(|e| e.pose).unwrap_or_default();
            let knowledge = Knowledge {
                agent: id.clone(),
                map_extent: [0.0, 0.0, w, h],
                racks: scenario.racks.clone(),
                base: pose.position(),
                astronaut: astronaut_id.clone(),
                container: rover_ids.iter().find(|r| *r != id).cloned(),
                control: CONTROL_ID.into(),
                tuning: scenario.decompose.clone(),
            };
            let mut config = scenario.exec.clone();
            if let Some(o) = scenario.overrides.get(id) {
                if let Some(n) = o.lock_failures {
                    config.lock_failures = n;
                }
                if let Some(l) = o.level {
                    config.level = l;
                }
            }
            rovers.push(RoverExecutive::new(knowledge, config, pose, geometry));
        }
        let astronaut = astronaut_id.map(|id| {
            AstronautAgent::new(id, scenario.astronaut.clone(), scenario.racks.clone(), scenario.decompose.clone())
        });
        let control = ControlAgent::new(CONTROL_ID, scenario.goals.clone(), scenario.operator_reset_tick);
        let mut bus = Bus::new(scenario.bus.clone(), scenario.seed);
        bus.dropouts = scenario.dropouts.clone();
        let mut dedupe = BTreeMap::new();
        dedupe.insert(CONTROL_ID.to_string(), Dedupe::default());
        for r in &rovers {
            dedupe.insert(r.id().to_string(), Dedupe::default());
        }
        if let Some(a) = &astronaut {
            dedupe.insert(a.id.clone(), Dedupe::default());
        }
        Ok(Sim {
            scenario: scenario.clone(),
            world,
            bus,
            rovers,
            astronaut,
            control,
            dedupe,
            trace: Vec::new(),
            tick: 0,
            finished: false,
        })
    }

    fn emit(&mut self, source: &str, kind: &str, payload: Value) {
        self.trace.push(TraceEvent {
            tick: self.tick,
            source: source.to_string(),
            kind: kind.to_string(),
            payload,
        });
    }

    fn post(&mut self, env: Envelope) {
        let kind = env.summary_kind();
        let (from, to, reliable) = (env.from.clone(), env.to.clone(), env.reliable);
        let id = self.bus.send(env, self.tick);
        self.emit(
            &from.clone(),
            "message",
            json!({"msg_id": id, "from": from, "to": to, "kind": kind, "reliable": reliable}),
        );
    }

    fn pose_of(&self, id: &str) -> Pose2 {
        self.world.entity(id).map(|e| e.pose).unwrap_or_default()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Mission complete: every control goal settled and all agents idle.
    pub fn settled(&self) -> bool {
        self.control.all_goals_settled()
            && self.rovers.iter().all(|r| r.idle())
            && self.astronaut.as_ref().is_none_or(|a| a.idle())
            && self.scenario.zones.iter().all(|z| z.tick < self.tick)
    }

    /// Advances one tick. Returns false once the run has ended.
    pub fn step(&mut self) -> Result<bool, HarnessError> {
        if self.finished {
            return Ok(false);
        }
        self.world.step_physics(self.scenario.dt);
        self.tick = self.world.tick;
        let tick = self.tick;

        let rover_poses: BTreeMap<String, [f64; 3]> = self
            .rovers
            .iter()
            .map(|r| {
                let p = self.pose_of(r.id());
                (r.id().to_string(), [p.x, p.y, p.heading])
            })
            .collect();
        let astro = self.astronaut.as_ref().map(|a| {
            let e = self.world.entity(&a.id);
            let p = e.map(|e| e.pose).unwrap_or_default();
            json!({"id": a.id, "pose": [p.x, p.y, p.heading], "upright": e.is_some_and(|e| e.is_upright())})
        });
        self.emit(HARNESS, "poses", json!({"rovers": rover_poses, "astronaut": astro}));

        let mut inboxes: BTreeMap<String, Vec<Envelope>> = self.dedupe.keys().map(|k| (k.clone(), Vec::new())).collect();

        for k in 0..self.rovers.len() {
            let id = self.rovers[k].id().to_string();
            let frame = crate::world::render_frame(&self.world, &id, tick).map_err(|e| HarnessError::World(e.to_string()))?;
            let out = self.rovers[k].perceive(&frame);
            self.emit(&id, "perception_frame", json!({"frame": out.replay, "track_ids": out.track_ids}));
            for ev in &out.events {
                self.emit(&id, "perception_event", json!(ev));
            }
            if tick % self.scenario.integrate_every.max(1) == 0 {
                self.rovers[k].integrate(&frame, &self.world.terrain);
            }
        }

        let zones: Vec<_> = self.scenario.zones.iter().filter(|z| z.tick == tick).cloned().collect();
        for z in zones {
            let p = self.pose_of(&z.agent);
            let f = p.forward();
            let point = [p.x + z.ahead * f[0], p.y + z.ahead * f[1]];
            self.emit(&z.agent, "zone_detected", json!({"point": point}));
            if let Some(inbox) = inboxes.get_mut(&z.agent) {
                inbox.push(Envelope {
                    msg_id: 0,
                    from: z.agent.clone(),
                    to: z.agent.clone(),
                    reliable: false,
                    message: crate::executive::Message::Observation(ObservationMsg {
                        source: z.agent.clone(),
                        tick,
                        kind: ObservationKind::InterestingZone,
                        payload: json!({"point": point}),
                    }),
                });
            }
        }

        for ev in self.bus.deliver(tick) {
            match ev {
                BusEvent::Delivered { envelope, .. } => {
                    for (id, inbox) in inboxes.iter_mut() {
                        let dd = self.dedupe.get_mut(id).expect("every agent has a dedupe");
                        if envelope.addressed_to(id) && dd.first_time(&envelope) {
                            inbox.push(envelope.clone());
                        }
                    }
                }
                BusEvent::Dropped {
                    msg_id,
                    to,
                    attempt,
                    will_retry,
                } => self.emit(
                    HARNESS,
                    "bus_drop",
                    json!({"msg_id": msg_id, "to": to, "attempt": attempt, "will_retry": will_retry}),
                ),
            }
        }

        let (out, notes) = self.control.tick(tick, inboxes.remove(CONTROL_ID).unwrap_or_default());
        for (kind, payload) in notes {
            self.emit(CONTROL_ID, &kind, payload);
        }
        for env in out {
            self.post(env);
        }

        let mut commands = Vec::new();
        for k in 0..self.rovers.len() {
            let id = self.rovers[k].id().to_string();
            let pose = self.pose_of(&id);
            let out = self.rovers[k].tick(tick, pose, inboxes.remove(&id).unwrap_or_default());
            for n in out.notes {
                self.emit(&id, &n.kind, n.payload);
            }
            for env in out.outbox {
                self.post(env);
            }
            commands.push((id, out.cmd));
        }

        if let Some(mut a) = self.astronaut.take() {
            let (pose, upright) = self
                .world
                .entity(&a.id)
                .map(|e| (e.pose, e.is_upright()))
                .unwrap_or_default();
            let out = a.tick(tick, pose, upright, inboxes.remove(&a.id).unwrap_or_default());
            let id = a.id.clone();
            self.astronaut = Some(a);
            for (kind, payload) in out.notes {
                self.emit(&id, &kind, payload);
            }
            for env in out.outbox {
                self.post(env);
            }
            if out.fall {
                self.set_upright(&id, false);
            }
            if out.stand_up {
                self.world.schedule.falls.retain(|f| f.entity != id);
                self.set_upright(&id, true);
            }
            let cmd = if upright || out.stand_up { out.cmd } else { (0.0, 0.0) };
            self.world
                .set_velocity(&id, cmd.0, cmd.1)
                .map_err(|e| HarnessError::World(e.to_string()))?;
        }

        for (id, (v, w)) in commands {
            let v = if self.unsafe_motion(&id, v) { 0.0 } else { v };
            self.world
                .set_velocity(&id, v, w)
                .map_err(|e| HarnessError::World(e.to_string()))?;
        }

        if tick >= self.scenario.ticks || (self.scenario.stop_when_idle && self.settled()) {
            self.finish_run();
        }
        Ok(!self.finished)
    }

    fn set_upright(&mut self, id: &str, value: bool) {
        if let Some(e) = self.world.entity_mut(id) {
            if let EntityState::Astronaut { upright } = &mut e.state {
                *upright = value;
            }
            if !value {
                e.velocity = Default::default();
            }
        }
    }

    /// True when moving forward at `v` would bring `id` closer than the
    /// safety distance to another mobile entity.
    fn unsafe_motion(&self, id: &str, v: f64) -> bool {
        if v <= 0.0 {
            return false;
        }
        let p = self.pose_of(id);
        let f = p.forward();
        let dt = self.scenario.dt;
        let next = [p.x + v * dt * f[0], p.y + v * dt * f[1]];
        self.world
            .entities
            .iter()
            .filter(|e| e.id != id && e.is_mobile())
            .any(|e| {
                let o = e.pose.position();
                let now = dist2(p.position(), o);
                let then = dist2(next, o);
                then < SAFETY_DISTANCE && then < now
            })
    }

    /// Known fraction of the union of all rover maps.
    pub fn coverage(&self) -> f64 {
        let mut maps = self.rovers.iter().map(|r| r.map.clone());
        let Some(first) = maps.next() else { return 0.0 };
        maps.fold(first, |acc, m| fuse_maps(&acc, &m, Se2::IDENTITY).unwrap_or(acc))
            .known_fraction()
    }

    fn finish_run(&mut self) {
        self.finished = true;
        let coverage = self.coverage();
        let seconds = self.tick as f64 * self.scenario.dt;
        let stats = self.bus.stats.clone();
        self.emit(
            HARNESS,
            "run_end",
            json!({
                "ticks": self.tick,
                "simulated_seconds": seconds,
                "coverage": coverage,
                "bus": {"sent": stats.sent, "delivered": stats.delivered, "dropped": stats.dropped,
                        "retransmitted": stats.retransmitted, "duplicates": stats.duplicates},
            }),
        );
    }

    /// Report over the trace so far.
    pub fn report(&self) -> Result<MissionReport, HarnessError> {
        Ok(metrics(&self.trace)?)
    }

    pub fn into_output(mut self) -> Result<RunOutput, HarnessError> {
        if !self.finished {
            self.finish_run();
        }
        let report = metrics(&self.trace)?;
        Ok(RunOutput {
            trace: self.trace,
            report,
            world: self.world,
        })
    }
}

/// Runs a scenario to completion. The report's wall-clock field is the only
/// non-deterministic output.
pub fn run(scenario: &Scenario) -> Result<RunOutput, HarnessError> {
    let started = Instant::now();
    let mut sim = Sim::new(scenario)?;
    while sim.step()? {}
    let mut out = sim.into_output()?;
    out.report.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok(out)
}
