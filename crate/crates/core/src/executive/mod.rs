//! Agent controller: goal and observation messages, the in-process bus,
//! autonomy gating, goal decomposition and scheduling, plan adaptation,
//! astronaut monitoring and emergency escalation.

mod agent;
mod bus;
mod decompose;
mod digest;
mod escalation;
mod messages;
mod monitor;
mod plan;

pub use agent::{AgentNote, AgentOutput, ExecConfig, PeerState, PerceptionOutput, Queued, RoverExecutive};
pub use bus::{Bus, BusConfig, BusEvent, BusStats, Dedupe, Dropout};
pub use decompose::{accept_goal, boustrophedon, decompose, repair_geometry, DecomposeConfig, Knowledge, Rejection};
pub use digest::{DigestError, MapDigest, DIGEST_SCALE};
pub use escalation::{escalate, EmergencyKind, EscalationAction, EscalationEvent, EscalationPhase, EscalationState};
pub use messages::{
    AstronautReply, AutonomyLevel, Envelope, GoalKind, GoalMsg, GoalState, GoalStatusEntry, Message, ObservationKind,
    ObservationMsg, BROADCAST,
};
pub use monitor::{
    astronaut_track, monitor_astronaut, stamp_safe_zone, supervise_task, EdgeLatch, MonitorConfig, Supervision,
};
pub use plan::{Plan, Step, StepKind, StepStatus};
