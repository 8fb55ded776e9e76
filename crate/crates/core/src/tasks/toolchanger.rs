use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tool {
    Shovel,
    Probe,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolPhase {
    Stowed,
    Approach,
    Docked,
    Locked,
    Verified,
}

impl ToolPhase {
    fn next(self) -> ToolPhase {
        match self {
            ToolPhase::Stowed => ToolPhase::Approach,
            ToolPhase::Approach => ToolPhase::Docked,
            ToolPhase::Docked => ToolPhase::Locked,
            ToolPhase::Locked | ToolPhase::Verified => ToolPhase::Verified,
        }
    }

    fn prev(self) -> ToolPhase {
        match self {
            ToolPhase::Stowed | ToolPhase::Approach => ToolPhase::Stowed,
            ToolPhase::Docked => ToolPhase::Approach,
            ToolPhase::Locked => ToolPhase::Docked,
            ToolPhase::Verified => ToolPhase::Locked,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolMode {
    Idle,
    Assembling,
    Disassembling,
}

/// Commands and arm feedback driving the tool changer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolInput {
    Assemble(Tool),
    Disassemble,
    Success,
    LockFailure,
}

impl ToolInput {
    pub const ALL: [ToolInput; 6] = [
        ToolInput::Assemble(Tool::Shovel),
        ToolInput::Assemble(Tool::Probe),
        ToolInput::Assemble(Tool::None),
        ToolInput::Disassemble,
        ToolInput::Success,
        ToolInput::LockFailure,
    ];
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ToolError {
    #[error("illegal tool-changer input {input:?} in {phase:?}/{mode:?}")]
    IllegalTransition {
        input: ToolInput,
        phase: ToolPhase,
        mode: ToolMode,
    },
    #[error("lock failed after {retries} retries")]
    LockFailedPermanently { retries: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ToolState {
    pub tool: Tool,
    pub phase: ToolPhase,
    pub retries: u32,
    pub mode: ToolMode,
    pub max_retries: u32,
}

impl Default for ToolState {
    fn default() -> Self {
        ToolState {
            tool: Tool::None,
            phase: ToolPhase::Stowed,
            retries: 0,
            mode: ToolMode::Idle,
            max_retries: 3,
        }
    }
}

impl ToolState {
    pub fn is_ready(&self, tool: Tool) -> bool {
        self.tool == tool && self.phase == ToolPhase::Verified && self.mode == ToolMode::Idle
    }

    /// Applies one input. Illegal inputs leave the state unchanged. A
    /// permanent lock failure also changes the state (back to Stowed when
    /// assembling, back to Verified when unlocking) before reporting.
    pub fn apply(&mut self, input: ToolInput) -> Result<(), ToolError> {
        use ToolInput::*;
        use ToolMode::*;
        let illegal = ToolError::IllegalTransition {
            input,
            phase: self.phase,
            mode: self.mode,
        };
        match (self.mode, self.phase, input) {
            (Idle, ToolPhase::Stowed, Assemble(t)) if self.tool == Tool::None && t != Tool::None => {
                self.tool = t;
                self.mode = Assembling;
                self.retries = 0;
            }
            (Idle, ToolPhase::Verified, Disassemble) => {
                self.mode = Disassembling;
                self.retries = 0;
            }
            (Assembling, phase, Success) => {
                self.phase = phase.next();
                if self.phase == ToolPhase::Verified {
                    self.mode = Idle;
                    self.retries = 0;
                }
            }
            (Assembling, ToolPhase::Docked, LockFailure) => {
                if self.retries >= self.max_retries {
                    let retries = self.retries + 1;
                    *self = ToolState {
                        max_retries: self.max_retries,
                        ..Default::default()
                    };
                    return Err(ToolError::LockFailedPermanently { retries });
                }
                self.retries += 1;
                self.phase = ToolPhase::Approach;
            }
            (Disassembling, phase, Success) => {
                self.phase = phase.prev();
                if self.phase == ToolPhase::Stowed {
                    self.tool = Tool::None;
                    self.mode = Idle;
                    self.retries = 0;
                }
            }
            (Disassembling, ToolPhase::Locked, LockFailure) => {
                if self.retries >= self.max_retries {
                    let retries = self.retries + 1;
                    self.phase = ToolPhase::Verified;
                    self.mode = Idle;
                    self.retries = 0;
                    return Err(ToolError::LockFailedPermanently { retries });
                }
                self.retries += 1;
            }
            _ => return Err(illegal),
        }
        Ok(())
    }
}
