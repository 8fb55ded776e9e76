use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::executive::{EscalationPhase, GoalState, GoalStatusEntry};
use crate::tasks::Verdict;

use super::{TraceError, TraceEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resumption {
    pub agent: String,
    pub goal_id: String,
    /// Step interrupted by the suspension.
    pub suspended_step: Option<usize>,
    /// First step still pending at suspension.
    pub first_pending: Option<usize>,
    /// Step the plan continued with; `None` until resumed.
    pub resumed_at: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MissionReport {
    pub goals_issued: usize,
    pub goals_completed: usize,
    pub goals_failed: usize,
    pub goals_rejected: usize,
    pub goal_status: BTreeMap<String, GoalState>,
    pub goal_kinds: BTreeMap<String, String>,
    pub collect_sample_goals: usize,
    pub samples_stored: usize,
    pub panel_verdicts: BTreeMap<u32, Verdict>,
    pub repairs_issued: usize,
    pub emergencies_raised: usize,
    pub emergencies_resolved: usize,
    pub control_notified: usize,
    pub escalation_phase: BTreeMap<String, EscalationPhase>,
    pub notifications: BTreeMap<String, usize>,
    pub resumptions: Vec<Resumption>,
    pub map_coverage: f64,
    pub min_path_clearance: Option<f64>,
    pub min_rover_distance: Option<f64>,
    pub messages_sent: usize,
    pub messages_dropped: usize,
    pub simulated_seconds: f64,
    /// Host time; not derived from the trace.
    pub wall_clock_seconds: f64,
}

impl MissionReport {
    pub fn cracked(&self) -> usize {
        self.panel_verdicts.values().filter(|v| **v == Verdict::Cracked).count()
    }

    /// The report with host timing cleared, for comparisons.
    pub fn deterministic(&self) -> MissionReport {
        MissionReport {
            wall_clock_seconds: 0.0,
            ..self.clone()
        }
    }
}

fn field<'a>(e: &'a TraceEvent, line: usize, key: &str) -> Result<&'a Value, TraceError> {
    e.payload.get(key).ok_or_else(|| TraceError::Corrupt {
        line,
        reason: format!("`{}` event lacks `{key}`", e.kind),
    })
}

fn parse<T: serde::de::DeserializeOwned>(v: &Value, line: usize) -> Result<T, TraceError> {
    serde_json::from_value(v.clone()).map_err(|err| TraceError::Corrupt {
        line,
        reason: err.to_string(),
    })
}

/// Pure fold over a trace. Line numbers in errors are 1-based event indices.
pub fn metrics(trace: &[TraceEvent]) -> Result<MissionReport, TraceError> {
    let mut r = MissionReport::default();
    let mut last_tick = 0;
    let mut open: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (i, e) in trace.iter().enumerate() {
        let line = i + 1;
        if e.tick < last_tick {
            return Err(TraceError::Corrupt {
                line,
                reason: format!("tick {} after {}", e.tick, last_tick),
            });
        }
        last_tick = e.tick;
        match e.kind.as_str() {
            "goal_received" => {
                let id: String = parse(field(e, line, "goal_id")?, line)?;
                let kind: String = parse(field(e, line, "kind")?, line)?;
                if r.goal_kinds.insert(id, kind.clone()).is_none() && kind == "CollectSample" {
                    r.collect_sample_goals += 1;
                }
            }
            "goal_status" => {
                let id: String = parse(field(e, line, "goal_id")?, line)?;
                let s: GoalStatusEntry = parse(field(e, line, "status")?, line)?;
                r.goal_status.insert(id, s.state);
            }
            "sample_stored" => r.samples_stored += 1,
            "panel_record" => {
                let rec = field(e, line, "record")?;
                let tag: u32 = parse(field_of(rec, line, "tag_id")?, line)?;
                let v: Verdict = parse(field_of(rec, line, "verdict")?, line)?;
                r.panel_verdicts.insert(tag, v);
            }
            "repair_issued" => r.repairs_issued += 1,
            "emergency" => r.emergencies_raised += 1,
            "escalation" => {
                let from: EscalationPhase = parse(field(e, line, "from")?, line)?;
                let to: EscalationPhase = parse(field(e, line, "to")?, line)?;
                if from == EscalationPhase::AlertSent && to == EscalationPhase::Nominal {
                    r.emergencies_resolved += 1;
                }
                if from != EscalationPhase::ControlNotified && to == EscalationPhase::ControlNotified {
                    r.control_notified += 1;
                }
                r.escalation_phase.insert(e.source.clone(), to);
            }
            "notification" => {
                let kind: String = parse(field_of(field(e, line, "body")?, line, "kind")?, line)?;
                *r.notifications.entry(kind).or_default() += 1;
            }
            "path_planned" => {
                if let Some(c) = field(e, line, "min_clearance")?.as_f64() {
                    r.min_path_clearance = Some(r.min_path_clearance.map_or(c, |m: f64| m.min(c)));
                }
            }
            "poses" => {
                let rovers: BTreeMap<String, [f64; 3]> = parse(field(e, line, "rovers")?, line)?;
                let v: Vec<[f64; 3]> = rovers.into_values().collect();
                for a in 0..v.len() {
                    for b in a + 1..v.len() {
                        let d = (v[a][0] - v[b][0]).hypot(v[a][1] - v[b][1]);
                        r.min_rover_distance = Some(r.min_rover_distance.map_or(d, |m: f64| m.min(d)));
                    }
                }
            }
            "plan_suspended" => {
                let goal_id: String = parse(field(e, line, "goal_id")?, line)?;
                let step: Option<usize> = parse(field(e, line, "step")?, line)?;
                let pending: Vec<usize> = parse(field(e, line, "pending")?, line)?;
                open.insert((e.source.clone(), goal_id.clone()), r.resumptions.len());
                r.resumptions.push(Resumption {
                    agent: e.source.clone(),
                    goal_id,
                    suspended_step: step,
                    first_pending: pending.first().copied(),
                    resumed_at: None,
                });
            }
            "plan_resumed" => {
                let goal_id: String = parse(field(e, line, "goal_id")?, line)?;
                let next: Option<usize> = parse(field(e, line, "next_step")?, line)?;
                if let Some(k) = open.remove(&(e.source.clone(), goal_id)) {
                    r.resumptions[k].resumed_at = next;
                }
            }
            "message" => r.messages_sent += 1,
            "bus_drop" => r.messages_dropped += 1,
            "run_end" => {
                r.map_coverage = parse(field(e, line, "coverage")?, line)?;
                r.simulated_seconds = parse(field(e, line, "simulated_seconds")?, line)?;
            }
            _ => {}
        }
    }
    for s in r.goal_status.values() {
        match s {
            GoalState::Done => r.goals_completed += 1,
            GoalState::Failed => r.goals_failed += 1,
            GoalState::Rejected => r.goals_rejected += 1,
            _ => {}
        }
    }
    r.goals_issued = r.goal_status.len();
    Ok(r)
}

fn field_of<'a>(v: &'a Value, line: usize, key: &str) -> Result<&'a Value, TraceError> {
    v.get(key).ok_or_else(|| TraceError::Corrupt {
        line,
        reason: format!("missing `{key}`"),
    })
}
