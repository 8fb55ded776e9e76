use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::executive::{
    repair_geometry, AstronautReply, DecomposeConfig, Envelope, GoalKind, GoalMsg, GoalState, GoalStatusEntry, Message,
    ObservationKind, ObservationMsg, BROADCAST,
};
use crate::geometry::{wrap_angle, Pose2};
use crate::tasks::RackSpec;

use super::{AstronautScript, ReplyPolicy};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Idle,
    Walk { target: [f64; 2], heading: f64, wrong: bool },
    Dwell { until: u64 },
    Work { done: u64 },
    Finished,
}

/// What the scripted astronaut asks of the world this tick.
#[derive(Debug, Clone, Default)]
pub struct AstronautOutput {
    pub outbox: Vec<Envelope>,
    pub notes: Vec<(String, Value)>,
    pub cmd: (f64, f64),
    pub fall: bool,
    pub stand_up: bool,
}

/// Scripted stand-in for the astronaut and the helmet console.
#[derive(Debug, Clone)]
pub struct AstronautAgent {
    pub id: String,
    pub script: AstronautScript,
    racks: Vec<RackSpec>,
    tuning: DecomposeConfig,
    goal: Option<GoalMsg>,
    phase: Phase,
    statuses: BTreeMap<String, GoalStatusEntry>,
    alert: Option<(u64, String)>,
    fell: bool,
}

impl AstronautAgent {
    pub fn new(id: impl Into<String>, script: AstronautScript, racks: Vec<RackSpec>, tuning: DecomposeConfig) -> Self {
        AstronautAgent {
            id: id.into(),
            script,
            racks,
            tuning,
            goal: None,
            phase: Phase::Idle,
            statuses: BTreeMap::new(),
            alert: None,
            fell: false,
        }
    }

    pub fn idle(&self) -> bool {
        matches!(self.phase, Phase::Idle | Phase::Finished)
    }

    fn worksite(&self, tag: u32) -> Option<([f64; 2], f64)> {
        self.racks.iter().find_map(|r| {
            let i = r.tag_ids.iter().position(|t| *t == tag)?;
            let (w, _, h) = repair_geometry(r, i, &self.tuning);
            Some((w, h))
        })
    }

    fn send(&self, out: &mut AstronautOutput, to: &str, reliable: bool, tick: u64, kind: ObservationKind, payload: Value) {
        out.outbox.push(Envelope {
            msg_id: 0,
            from: self.id.clone(),
            to: to.to_string(),
            reliable,
            message: Message::Observation(ObservationMsg {
                source: self.id.clone(),
                tick,
                kind,
                payload,
            }),
        });
    }

    fn set_status(&mut self, out: &mut AstronautOutput, tick: u64, state: GoalState) {
        let Some(g) = self.goal.clone() else { return };
        let entry = GoalStatusEntry { state, reason: None };
        self.statuses.insert(g.goal_id.clone(), entry.clone());
        out.notes
            .push(("goal_status".into(), json!({"goal_id": g.goal_id, "status": entry})));
        let payload = json!({"goals": {g.goal_id.clone(): entry}});
        self.send(out, &g.issuer, true, tick, ObservationKind::GoalStatus, payload);
    }

    fn start_goal(&mut self, out: &mut AstronautOutput, g: GoalMsg, tick: u64) {
        out.notes.push(("goal_received".into(), json!(g)));
        if g.kind != GoalKind::AssistRepair || self.goal.is_some() {
            let entry = GoalStatusEntry {
                state: GoalState::Rejected,
                reason: Some("busy or unsupported".into()),
            };
            self.statuses.insert(g.goal_id.clone(), entry.clone());
            out.notes
                .push(("goal_status".into(), json!({"goal_id": g.goal_id, "status": entry})));
            return;
        }
        let tag = g.param_u32("tag_id");
        self.goal = Some(g);
        self.set_status(out, tick, GoalState::Active);
        let wrong = self.script.wrong_panel_first.and_then(|t| self.worksite(t));
        let right = tag.and_then(|t| self.worksite(t));
        self.phase = match (wrong, right) {
            (Some((w, h)), _) => Phase::Walk {
                target: w,
                heading: h,
                wrong: true,
            },
            (None, Some((w, h))) => Phase::Walk {
                target: w,
                heading: h,
                wrong: false,
            },
            _ => {
                self.set_status(out, tick, GoalState::Failed);
                Phase::Finished
            }
        };
    }

    pub fn tick(&mut self, tick: u64, pose: Pose2, upright: bool, inbox: Vec<Envelope>) -> AstronautOutput {
        let mut out = AstronautOutput::default();
        for env in inbox {
            match env.message {
                Message::Goal(g) if g.target == self.id => self.start_goal(&mut out, g, tick),
                Message::Observation(o) if o.kind == ObservationKind::Notification => {
                    out.notes.push(("console".into(), json!({"from": o.source, "body": o.payload})));
                    if o.payload.get("kind").and_then(|k| k.as_str()) == Some("alert") && self.alert.is_none() {
                        self.alert = Some((tick, o.source.clone()));
                    }
                }
                _ => {}
            }
        }
        if let Some((at, from)) = self.alert.clone() {
            if tick - at >= self.script.reply_delay_ticks {
                self.alert = None;
                let reply = match self.script.reply {
                    ReplyPolicy::Silent => None,
                    ReplyPolicy::Ok => Some(AstronautReply::Ok),
                    ReplyPolicy::Help => Some(AstronautReply::Help),
                };
                if let Some(r) = reply {
                    out.notes.push(("reply".into(), json!({"to": from, "reply": r})));
                    self.send(&mut out, &from, true, tick, ObservationKind::AstronautReply, json!({"reply": r}));
                    if r == AstronautReply::Ok && !upright {
                        out.stand_up = true;
                    }
                }
            }
        }
        let moving = upright || out.stand_up;
        if moving {
            self.advance(&mut out, tick, pose);
        }
        self.send(&mut out, BROADCAST, false, tick, ObservationKind::Pose, json!(pose));
        self.send(&mut out, BROADCAST, false, tick, ObservationKind::Heartbeat, Value::Null);
        let statuses = json!({"goals": self.statuses});
        self.send(&mut out, BROADCAST, false, tick, ObservationKind::GoalStatus, statuses);
        out
    }

    fn advance(&mut self, out: &mut AstronautOutput, tick: u64, pose: Pose2) {
        match self.phase {
            Phase::Idle | Phase::Finished => {}
            Phase::Walk { target, heading, wrong } => {
                let d = pose.distance_to(target);
                if d <= 0.15 {
                    let err = wrap_angle(heading - pose.heading);
                    if err.abs() > 0.1 {
                        out.cmd = (0.0, (1.5 * err).clamp(-1.0, 1.0));
                        return;
                    }
                    out.notes.push(("arrived".into(), json!({"target": target, "wrong_panel": wrong})));
                    self.phase = if wrong {
                        Phase::Dwell {
                            until: tick + self.script.wrong_dwell_ticks,
                        }
                    } else {
                        Phase::Work { done: 0 }
                    };
                    return;
                }
                let bearing = (target[1] - pose.y).atan2(target[0] - pose.x);
                let err = wrap_angle(bearing - pose.heading);
                out.cmd = if err.abs() > 0.3 {
                    (0.0, (1.5 * err).clamp(-1.0, 1.0))
                } else {
                    (self.script.speed.min(d), 1.5 * err)
                };
            }
            Phase::Dwell { until } => {
                if tick >= until {
                    let tag = self.goal.as_ref().and_then(|g| g.param_u32("tag_id"));
                    if let Some((w, h)) = tag.and_then(|t| self.worksite(t)) {
                        self.phase = Phase::Walk {
                            target: w,
                            heading: h,
                            wrong: false,
                        };
                    }
                }
            }
            Phase::Work { done } => {
                let done = done + 1;
                if !self.fell && self.script.fall_after_work_ticks == Some(done) {
                    self.fell = true;
                    out.fall = true;
                    out.notes.push(("fall".into(), json!({"work_ticks": done})));
                }
                if done >= self.script.work_ticks {
                    self.phase = Phase::Finished;
                    self.set_status(out, tick, GoalState::Done);
                } else {
                    self.phase = Phase::Work { done };
                }
            }
        }
    }
}
