//! Scenario runner: builds the world and agents from a scenario file, steps
//! them on a fixed tick and records a JSON-lines trace.

mod astronaut;
mod control;
mod inspect;
mod metrics;
mod render;
mod scenario;
mod sim;
mod trace;

pub use astronaut::{AstronautAgent, AstronautOutput};
pub use control::ControlAgent;
pub use inspect::{inspect_scenario, TeleportRover};
pub use metrics::{metrics, MissionReport, Resumption};
pub use render::{render_path, render_trace};
pub use scenario::{
    AgentOverrides, AstronautScript, EntitySpec, ReplyPolicy, Scenario, ScenarioInvalid, ScheduledGoal, ScheduledZone,
    TerrainSource, SCENARIO_VERSION,
};
pub use sim::{run, HarnessError, RunOutput, Sim, CONTROL_ID};
pub use trace::{read_trace, trace_bytes, write_trace, TraceError, TraceEvent};
