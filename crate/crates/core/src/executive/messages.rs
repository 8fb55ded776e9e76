use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AutonomyLevel {
    E1,
    E2,
    E3,
    E4,
}

impl AutonomyLevel {
    pub const ALL: [AutonomyLevel; 4] = [AutonomyLevel::E1, AutonomyLevel::E2, AutonomyLevel::E3, AutonomyLevel::E4];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GoalKind {
    ExploreRegion,
    InspectRack,
    CollectSample,
    RepairPanel,
    ReturnToBase,
    NavigateTo,
    AssistRepair,
    /// Anything the receiver does not recognise.
    #[serde(other)]
    Unknown,
}

impl GoalKind {
    /// Kinds that may be issued at E4.
    pub fn is_e4(self) -> bool {
        matches!(
            self,
            GoalKind::ExploreRegion
                | GoalKind::InspectRack
                | GoalKind::CollectSample
                | GoalKind::RepairPanel
                | GoalKind::ReturnToBase
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalMsg {
    pub goal_id: String,
    pub issuer: String,
    pub target: String,
    pub level: AutonomyLevel,
    pub kind: GoalKind,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub priority: i32,
}

impl GoalMsg {
    pub fn param_f64(&self, key: &str) -> Option<f64> {
        self.params.get(key)?.as_f64()
    }

    pub fn param_point(&self, key: &str) -> Option<[f64; 2]> {
        let a = self.params.get(key)?.as_array()?;
        match a.as_slice() {
            [x, y] => Some([x.as_f64()?, y.as_f64()?]),
            _ => None,
        }
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        self.params.get(key)?.as_str()
    }

    pub fn param_u32(&self, key: &str) -> Option<u32> {
        self.params.get(key)?.as_u64().and_then(|v| u32::try_from(v).ok())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObservationKind {
    Pose,
    MapDigest,
    Detection,
    InterestingZone,
    PanelReport,
    Emergency,
    GoalStatus,
    Heartbeat,
    AstronautReply,
    /// Operator-console notices (wrong target, reminders, alerts).
    Notification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMsg {
    pub source: String,
    pub tick: u64,
    pub kind: ObservationKind,
    #[serde(default)]
    pub payload: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AstronautReply {
    #[serde(rename = "OK")]
    Ok,
    #[serde(rename = "HELP")]
    Help,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalState {
    Accepted,
    Rejected,
    Active,
    Suspended,
    Done,
    Failed,
}

impl GoalState {
    pub fn is_terminal(self) -> bool {
        matches!(self, GoalState::Rejected | GoalState::Done | GoalState::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalStatusEntry {
    pub state: GoalState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body")]
pub enum Message {
    Goal(GoalMsg),
    Observation(ObservationMsg),
}

/// A message on the bus. `to` is an agent id or `*` for broadcast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub msg_id: u64,
    pub from: String,
    pub to: String,
    /// Reliable envelopes are retransmitted until delivered and de-duplicated by the receiver.
    pub reliable: bool,
    pub message: Message,
}

pub const BROADCAST: &str = "*";

impl Envelope {
    pub fn addressed_to(&self, agent: &str) -> bool {
        (self.to == agent || self.to == BROADCAST) && self.from != agent
    }

    pub fn summary_kind(&self) -> String {
        match &self.message {
            Message::Goal(g) => format!("goal:{:?}", g.kind),
            Message::Observation(o) => format!("obs:{:?}", o.kind),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_kind_parses() {
        let g: GoalMsg = serde_json::from_str(
            r#"{"goal_id":"g","issuer":"c","target":"l","level":"E4","kind":"Dance","params":{},"priority":1}"#,
        )
        .unwrap();
        assert_eq!(g.kind, GoalKind::Unknown);
    }

    #[test]
    fn reply_wire_vocabulary() {
        assert_eq!(serde_json::to_string(&AstronautReply::Help).unwrap(), "\"HELP\"");
        assert_eq!(serde_json::to_string(&AstronautReply::Ok).unwrap(), "\"OK\"");
    }

    #[test]
    fn e4_kinds() {
        assert!(GoalKind::ReturnToBase.is_e4());
        assert!(!GoalKind::NavigateTo.is_e4());
        assert!(!GoalKind::AssistRepair.is_e4());
    }
}
