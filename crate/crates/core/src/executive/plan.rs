use serde::{Deserialize, Serialize};

use crate::tasks::Tool;

use super::{GoalKind, GoalMsg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Pending,
    Active,
    Done,
    Failed,
    Suspended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum StepKind {
    NavigateTo {
        point: [f64; 2],
        tolerance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        heading: Option<f64>,
    },
    PublishMapDigest,
    InspectPanel { rack_id: String, index: usize, tag_id: u32 },
    PublishPanelReport { rack_id: String },
    /// Wait for a peer to reach `point`.
    Rendezvous { peer: String, point: [f64; 2], radius: f64 },
    ToolChange { tool: Tool },
    MoveToSite { point: [f64; 2] },
    Scoop,
    Transfer { container: String },
    ResumeHook,
    /// Hold position until the sampler's goal is terminal.
    HoldForTransfer { sampler: String, sample_goal: String },
    SendGoal { goal: GoalMsg },
    /// Watch the astronaut until it interacts with the assigned panel.
    Supervise { astronaut: String, tag_id: u32 },
    /// Wait for the astronaut's repair goal to finish.
    AwaitRepair { astronaut: String, goal_id: String },
}

impl StepKind {
    pub fn name(&self) -> &'static str {
        match self {
            StepKind::NavigateTo { .. } => "navigate_to",
            StepKind::PublishMapDigest => "publish_map_digest",
            StepKind::InspectPanel { .. } => "inspect_panel",
            StepKind::PublishPanelReport { .. } => "publish_panel_report",
            StepKind::Rendezvous { .. } => "rendezvous",
            StepKind::ToolChange { .. } => "tool_change",
            StepKind::MoveToSite { .. } => "move_to_site",
            StepKind::Scoop => "scoop",
            StepKind::Transfer { .. } => "transfer",
            StepKind::ResumeHook => "resume_hook",
            StepKind::HoldForTransfer { .. } => "hold_for_transfer",
            StepKind::SendGoal { .. } => "send_goal",
            StepKind::Supervise { .. } => "supervise",
            StepKind::AwaitRepair { .. } => "await_repair",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub kind: StepKind,
    pub status: StepStatus,
    /// Failure of an optional step does not fail the plan.
    #[serde(default)]
    pub optional: bool,
    /// Runs even after the plan has been aborted (clean-up).
    #[serde(default)]
    pub always: bool,
}

impl Step {
    pub fn new(kind: StepKind) -> Self {
        Step {
            kind,
            status: StepStatus::Pending,
            optional: false,
            always: false,
        }
    }

    pub fn optional(mut self) -> Self {
        self.optional = true;
        self
    }

    pub fn always(mut self) -> Self {
        self.always = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub goal_id: String,
    pub kind: GoalKind,
    pub issuer: String,
    pub priority: i32,
    pub steps: Vec<Step>,
    /// Set once a non-optional step fails; only `always` steps run afterwards.
    #[serde(default)]
    pub aborted: bool,
}

impl Plan {
    pub fn new(goal: &GoalMsg, steps: Vec<Step>) -> Self {
        Plan {
            goal_id: goal.goal_id.clone(),
            kind: goal.kind,
            issuer: goal.issuer.clone(),
            priority: goal.priority,
            steps,
            aborted: false,
        }
    }

    pub fn active_index(&self) -> Option<usize> {
        self.steps.iter().position(|s| s.status == StepStatus::Active)
    }

    /// Next step that should run: the first Pending one (only `always` steps once aborted).
    pub fn next_pending(&self) -> Option<usize> {
        self.steps
            .iter()
            .position(|s| s.status == StepStatus::Pending && (!self.aborted || s.always))
    }

    pub fn pending_indices(&self) -> Vec<usize> {
        (0..self.steps.len()).filter(|k| self.steps[*k].status == StepStatus::Pending).collect()
    }

    /// Marks the next pending step Active and returns its index.
    pub fn activate_next(&mut self) -> Option<usize> {
        debug_assert!(self.active_index().is_none());
        let k = self.next_pending()?;
        self.steps[k].status = StepStatus::Active;
        Some(k)
    }

    pub fn finish_active(&mut self, ok: bool) -> Option<usize> {
        let k = self.active_index()?;
        if ok {
            self.steps[k].status = StepStatus::Done;
        } else {
            self.steps[k].status = StepStatus::Failed;
            if !self.steps[k].optional {
                self.aborted = true;
            }
        }
        Some(k)
    }

    /// Interrupts the active step. Pending steps are kept verbatim and are
    /// exactly what runs after resumption.
    pub fn suspend(&mut self) -> Option<usize> {
        let k = self.active_index()?;
        self.steps[k].status = StepStatus::Suspended;
        Some(k)
    }

    pub fn is_finished(&self) -> bool {
        self.active_index().is_none() && self.next_pending().is_none()
    }

    pub fn succeeded(&self) -> bool {
        self.is_finished() && !self.aborted
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executive::AutonomyLevel;

    fn plan(n: usize) -> Plan {
        let g = GoalMsg {
            goal_id: "g".into(),
            issuer: "c".into(),
            target: "l".into(),
            level: AutonomyLevel::E4,
            kind: GoalKind::ExploreRegion,
            params: Default::default(),
            priority: 0,
        };
        Plan::new(&g, (0..n).map(|_| Step::new(StepKind::PublishMapDigest)).collect())
    }

    #[test]
    fn suspend_keeps_pending_tail() {
        let mut p = plan(7);
        for _ in 0..2 {
            p.activate_next();
            p.finish_active(true);
        }
        p.activate_next();
        let before = p.pending_indices();
        assert_eq!(p.suspend(), Some(2));
        assert_eq!(p.pending_indices(), before);
        assert_eq!(p.activate_next(), Some(3));
    }

    #[test]
    fn abort_runs_only_always_steps() {
        let mut p = plan(3);
        p.steps[2].always = true;
        p.activate_next();
        p.finish_active(false);
        assert!(p.aborted);
        assert_eq!(p.activate_next(), Some(2));
        p.finish_active(true);
        assert!(p.is_finished() && !p.succeeded());
    }
}
