use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::executive::{Envelope, GoalStatusEntry, Message, ObservationKind, ObservationMsg, BROADCAST};

use super::ScheduledGoal;

/// Scripted mission control: issues the scenario's goals on schedule and
/// collects statuses, reports and emergencies.
#[derive(Debug, Clone)]
pub struct ControlAgent {
    pub id: String,
    goals: Vec<ScheduledGoal>,
    sent: BTreeSet<String>,
    pub statuses: BTreeMap<String, GoalStatusEntry>,
    pub reports: Vec<Value>,
    pub emergencies: Vec<Value>,
    reset_tick: Option<u64>,
}

impl ControlAgent {
    pub fn new(id: impl Into<String>, goals: Vec<ScheduledGoal>, reset_tick: Option<u64>) -> Self {
        ControlAgent {
            id: id.into(),
            goals,
            sent: BTreeSet::new(),
            statuses: BTreeMap::new(),
            reports: Vec::new(),
            emergencies: Vec::new(),
            reset_tick,
        }
    }

    /// Every scheduled goal sent and known terminal.
    pub fn all_goals_settled(&self) -> bool {
        self.goals.iter().all(|g| {
            self.statuses
                .get(&g.goal.goal_id)
                .is_some_and(|s| s.state.is_terminal())
        })
    }

    pub fn tick(&mut self, tick: u64, inbox: Vec<Envelope>) -> (Vec<Envelope>, Vec<(String, Value)>) {
        let mut out = Vec::new();
        let mut notes = Vec::new();
        for env in inbox {
            let Message::Observation(o) = env.message else { continue };
            match o.kind {
                ObservationKind::GoalStatus => {
                    if let Some(goals) = o.payload.get("goals").and_then(|g| g.as_object()) {
                        for (id, e) in goals {
                            let Ok(e) = serde_json::from_value::<GoalStatusEntry>(e.clone()) else { continue };
                            if !self.sent.contains(id) {
                                continue;
                            }
                            let settled = self.statuses.get(id).is_some_and(|s| s.state.is_terminal());
                            if !settled && self.statuses.get(id) != Some(&e) {
                                notes.push(("control_status".into(), json!({"goal_id": id, "status": e})));
                                self.statuses.insert(id.clone(), e);
                            }
                        }
                    }
                }
                ObservationKind::PanelReport => {
                    notes.push(("control_report".into(), json!({"from": o.source, "report": o.payload})));
                    self.reports.push(o.payload);
                }
                ObservationKind::Emergency => {
                    notes.push(("control_emergency".into(), json!({"from": o.source, "body": o.payload})));
                    self.emergencies.push(o.payload);
                }
                _ => {}
            }
        }
        for g in &self.goals {
            if g.tick <= tick && self.sent.insert(g.goal.goal_id.clone()) {
                notes.push(("goal_issued".into(), json!(g.goal)));
                out.push(Envelope {
                    msg_id: 0,
                    from: self.id.clone(),
                    to: g.goal.target.clone(),
                    reliable: true,
                    message: Message::Goal(g.goal.clone()),
                });
            }
        }
        if self.reset_tick == Some(tick) {
            notes.push(("operator_reset".into(), Value::Null));
            out.push(Envelope {
                msg_id: 0,
                from: self.id.clone(),
                to: BROADCAST.into(),
                reliable: true,
                message: Message::Observation(ObservationMsg {
                    source: self.id.clone(),
                    tick,
                    kind: ObservationKind::Notification,
                    payload: json!({"command": "reset_escalation"}),
                }),
            });
        }
        (out, notes)
    }
}
