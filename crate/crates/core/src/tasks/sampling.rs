use serde::{Deserialize, Serialize};

use super::{Tool, ToolState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortCause {
    Tool,
    Planner,
    Container,
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", content = "cause", rename_all = "snake_case")]
pub enum SamplePhase {
    NeedTool,
    MoveToSite,
    Scoop,
    Transfer,
    Stored,
    Aborted(AbortCause),
}

impl SamplePhase {
    pub fn is_terminal(&self) -> bool {
        matches!(self, SamplePhase::Stored | SamplePhase::Aborted(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleEvent {
    ToolVerified,
    Arrived,
    ScoopComplete,
    TransferComplete,
    Fault(AbortCause),
}

/// Work the operation asks its owner to carry out on entering a phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum SampleCommand {
    AssembleTool { tool: Tool },
    NavigateTo { point: [f64; 2] },
    Scoop,
    Transfer { container: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SampleError {
    #[error("container `{container}` is {distance:.2} m away, transfer range {range:.2} m")]
    ContainerOutOfRange { container: String, distance: f64, range: f64 },
    #[error("shovel is not assembled and verified")]
    ToolNotReady,
    #[error("event {event:?} not expected in phase {phase:?}")]
    IllegalTransition { event: SampleEvent, phase: SamplePhase },
}

/// Facts the operation checks at its guards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleContext {
    pub tool: ToolState,
    pub container_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOp {
    pub target: [f64; 2],
    pub phase: SamplePhase,
    pub container: String,
    pub transfer_range: f64,
}

impl SampleOp {
    /// New operation and its first command. Skips tool assembly when the
    /// shovel is already verified.
    pub fn start(target: [f64; 2], container: impl Into<String>, tool: &ToolState) -> (Self, SampleCommand) {
        let mut op = SampleOp {
            target,
            phase: SamplePhase::NeedTool,
            container: container.into(),
            transfer_range: 1.0,
        };
        let cmd = if tool.is_ready(Tool::Shovel) {
            op.phase = SamplePhase::MoveToSite;
            SampleCommand::NavigateTo { point: target }
        } else {
            SampleCommand::AssembleTool { tool: Tool::Shovel }
        };
        (op, cmd)
    }

    /// Advances on one event. Errors leave the phase unchanged.
    pub fn apply(&mut self, event: SampleEvent, ctx: &SampleContext) -> Result<Option<SampleCommand>, SampleError> {
        use SampleEvent::*;
        use SamplePhase::*;
        if self.phase.is_terminal() {
            return Err(SampleError::IllegalTransition {
                event,
                phase: self.phase.clone(),
            });
        }
        if let Fault(cause) = event {
            self.phase = Aborted(cause);
            return Ok(None);
        }
        let cmd = match (&self.phase, &event) {
            (NeedTool, ToolVerified) => {
                self.phase = MoveToSite;
                Some(SampleCommand::NavigateTo { point: self.target })
            }
            (MoveToSite, Arrived) => {
                if !ctx.tool.is_ready(Tool::Shovel) {
                    return Err(SampleError::ToolNotReady);
                }
                self.phase = Scoop;
                Some(SampleCommand::Scoop)
            }
            (Scoop, ScoopComplete) => {
                self.phase = Transfer;
                Some(SampleCommand::Transfer {
                    container: self.container.clone(),
                })
            }
            (Transfer, TransferComplete) => {
                self.check_range(ctx)?;
                self.phase = Stored;
                None
            }
            _ => {
                return Err(SampleError::IllegalTransition {
                    event,
                    phase: self.phase.clone(),
                })
            }
        };
        Ok(cmd)
    }

    pub fn check_range(&self, ctx: &SampleContext) -> Result<(), SampleError> {
        if ctx.container_distance > self.transfer_range {
            return Err(SampleError::ContainerOutOfRange {
                container: self.container.clone(),
                distance: ctx.container_distance,
                range: self.transfer_range,
            });
        }
        Ok(())
    }
}
