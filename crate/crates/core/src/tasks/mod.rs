//! Solar-panel rack inspection and the tool-changer and sampling state machines.

mod inspection;
mod sampling;
mod toolchanger;

pub use inspection::{
    classify_panel, inspect_rack, verdict_from_evidence, InspectionConfig, InspectionReport, PanelCapture,
    PanelEvidence, PanelGeometry, PanelRecord, RackSpec, RoverInterface, TaskError, Verdict,
};
pub use sampling::{AbortCause, SampleCommand, SampleContext, SampleError, SampleEvent, SampleOp, SamplePhase};
pub use toolchanger::{Tool, ToolError, ToolInput, ToolMode, ToolPhase, ToolState};
