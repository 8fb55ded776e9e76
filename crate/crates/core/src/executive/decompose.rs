use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::tasks::{RackSpec, Tool};

use super::{AutonomyLevel, GoalKind, GoalMsg, Plan, Step, StepKind};

/// What an agent knows when turning goals into plans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knowledge {
    pub agent: String,
    /// Mapped area as `[x0, y0, x1, y1]`.
    pub map_extent: [f64; 4],
    #[serde(default)]
    pub racks: Vec<RackSpec>,
    #[serde(default)]
    pub base: [f64; 2],
    #[serde(default)]
    pub astronaut: Option<String>,
    /// Peer carrying the tools and the sample container.
    #[serde(default)]
    pub container: Option<String>,
    #[serde(default = "default_control")]
    pub control: String,
    #[serde(default = "default_tuning")]
    pub tuning: DecomposeConfig,
}

fn default_control() -> String {
    "control".into()
}

fn default_tuning() -> DecomposeConfig {
    DecomposeConfig::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecomposeConfig {
    pub waypoint_tolerance: f64,
    pub precise_tolerance: f64,
    /// Lateral offset of the container rover from the sample site.
    pub park_offset: f64,
    /// Worksite distance in front of a panel.
    pub worksite_offset: f64,
    /// Supervision distance behind the worksite, along the panel normal.
    pub supervision_offset: f64,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig {
            waypoint_tolerance: 0.3,
            precise_tolerance: 0.1,
            park_offset: 0.75,
            worksite_offset: 0.8,
            supervision_offset: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "reason", content = "detail")]
pub enum Rejection {
    #[error("AutonomyLevelMismatch")]
    AutonomyLevelMismatch,
    #[error("UnknownGoalKind")]
    UnknownGoalKind,
    #[error("UnplannableGoal: {0}")]
    UnplannableGoal(String),
}

/// Autonomy gate followed by decomposition. At E4 only E4-level goals of
/// E4 kinds pass; below E4 only navigation goals at or under the agent's level.
pub fn accept_goal(level: AutonomyLevel, goal: &GoalMsg, k: &Knowledge) -> Result<Plan, Rejection> {
    if goal.kind == GoalKind::Unknown {
        return Err(Rejection::UnknownGoalKind);
    }
    let admitted = if level == AutonomyLevel::E4 {
        goal.level == AutonomyLevel::E4 && goal.kind.is_e4()
    } else {
        goal.kind == GoalKind::NavigateTo && goal.level <= level
    };
    if !admitted {
        return Err(Rejection::AutonomyLevelMismatch);
    }
    decompose(goal, k)
}

fn inside(extent: &[f64; 4], p: [f64; 2]) -> bool {
    p[0] >= extent[0] && p[0] <= extent[2] && p[1] >= extent[1] && p[1] <= extent[3]
}

fn unplannable(msg: impl Into<String>) -> Rejection {
    Rejection::UnplannableGoal(msg.into())
}

/// Region parameter: `[x0, y0, x1, y1]` or a polygon (its bounding box is covered).
fn region(goal: &GoalMsg) -> Option<[f64; 4]> {
    let v = goal.params.get("region")?.as_array()?;
    if v.len() == 4 && v.iter().all(|x| x.is_number()) {
        let r: Vec<f64> = v.iter().filter_map(|x| x.as_f64()).collect();
        return Some([r[0].min(r[2]), r[1].min(r[3]), r[0].max(r[2]), r[1].max(r[3])]);
    }
    let pts: Vec<[f64; 2]> = v
        .iter()
        .filter_map(|p| {
            let a = p.as_array()?;
            Some([a.first()?.as_f64()?, a.get(1)?.as_f64()?])
        })
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let fold = |f: fn(f64, f64) -> f64, k: usize, init: f64| pts.iter().map(|p| p[k]).fold(init, f);
    Some([
        fold(f64::min, 0, f64::INFINITY),
        fold(f64::min, 1, f64::INFINITY),
        fold(f64::max, 0, f64::NEG_INFINITY),
        fold(f64::max, 1, f64::NEG_INFINITY),
    ])
}

/// Lane y-coordinates of a boustrophedon sweep: `ceil(height / spacing)` lanes.
pub fn boustrophedon(region: [f64; 4], spacing: f64) -> Vec<([f64; 2], [f64; 2])> {
    let [x0, y0, x1, y1] = region;
    let lanes = ((y1 - y0) / spacing).ceil().max(1.0) as usize;
    (0..lanes)
        .map(|k| {
            let y = (y0 + spacing * (k as f64 + 0.5)).min(y1);
            if k % 2 == 0 {
                ([x0, y], [x1, y])
            } else {
                ([x1, y], [x0, y])
            }
        })
        .collect()
}

fn rack_and_index<'a>(k: &'a Knowledge, tag: u32) -> Option<(&'a RackSpec, usize)> {
    k.racks
        .iter()
        .find_map(|r| r.tag_ids.iter().position(|t| *t == tag).map(|i| (r, i)))
}

/// Worksite in front of a panel and the supervision pose behind it.
pub fn repair_geometry(rack: &RackSpec, index: usize, cfg: &DecomposeConfig) -> ([f64; 2], [f64; 2], f64) {
    let p = rack.panel_poses[index];
    let (s, c) = p.heading.sin_cos();
    let worksite = [p.x + c * cfg.worksite_offset, p.y + s * cfg.worksite_offset];
    let d = cfg.worksite_offset + cfg.supervision_offset;
    let supervise = [p.x + c * d, p.y + s * d];
    (worksite, supervise, crate::geometry::wrap_angle(p.heading + std::f64::consts::PI))
}

/// Breaks an accepted goal into an ordered step list.
pub fn decompose(goal: &GoalMsg, k: &Knowledge) -> Result<Plan, Rejection> {
    let t = &k.tuning;
    let nav = |point, tolerance| StepKind::NavigateTo {
        point,
        tolerance,
        heading: None,
    };
    let steps = match goal.kind {
        GoalKind::ExploreRegion => {
            let r = region(goal).ok_or_else(|| unplannable("ExploreRegion needs a region"))?;
            let spacing = goal.param_f64("spacing").unwrap_or(2.0);
            if spacing <= 0.0 {
                return Err(unplannable("spacing must be positive"));
            }
            if !inside(&k.map_extent, [r[0], r[1]]) || !inside(&k.map_extent, [r[2], r[3]]) {
                return Err(unplannable("region outside map"));
            }
            boustrophedon(r, spacing)
                .into_iter()
                .flat_map(|(a, b)| {
                    [
                        Step::new(nav(a, t.waypoint_tolerance)).optional(),
                        Step::new(nav(b, t.waypoint_tolerance)).optional(),
                        Step::new(StepKind::PublishMapDigest),
                    ]
                })
                .collect()
        }
        GoalKind::InspectRack => {
            let id = goal.param_str("rack_id").ok_or_else(|| unplannable("InspectRack needs rack_id"))?;
            let rack = k
                .racks
                .iter()
                .find(|r| r.rack_id == id)
                .ok_or_else(|| unplannable(format!("unknown rack `{id}`")))?;
            rack.validate().map_err(|e| unplannable(e.to_string()))?;
            let mut steps = Vec::new();
            for (i, tag) in rack.tag_ids.iter().enumerate() {
                let s = rack.standoff_pose(i);
                steps.push(Step::new(StepKind::NavigateTo {
                    point: [s.x, s.y],
                    tolerance: t.precise_tolerance,
                    heading: Some(s.heading),
                }));
                steps.push(Step::new(StepKind::InspectPanel {
                    rack_id: rack.rack_id.clone(),
                    index: i,
                    tag_id: *tag,
                }));
            }
            steps.push(Step::new(StepKind::PublishPanelReport {
                rack_id: rack.rack_id.clone(),
            }));
            steps
        }
        GoalKind::CollectSample => {
            let point = goal.param_point("point").ok_or_else(|| unplannable("CollectSample needs point"))?;
            if !inside(&k.map_extent, point) {
                return Err(unplannable("sample point outside map"));
            }
            let park = goal.param_point("park").unwrap_or([point[0], point[1] + t.park_offset]);
            match goal.param_str("role").unwrap_or("sampler") {
                "container" => {
                    let sampler = goal.param_str("sampler").unwrap_or(&goal.issuer).to_string();
                    let sample_goal = goal
                        .param_str("sample_goal")
                        .ok_or_else(|| unplannable("container role needs sample_goal"))?
                        .to_string();
                    vec![
                        Step::new(nav(park, t.precise_tolerance)),
                        Step::new(StepKind::HoldForTransfer { sampler, sample_goal }),
                    ]
                }
                "sampler" => {
                    let container = goal
                        .param_str("container")
                        .map(str::to_string)
                        .or_else(|| k.container.clone())
                        .ok_or_else(|| unplannable("no container agent"))?;
                    let mut params = goal.params.clone();
                    params.insert("role".into(), json!("container"));
                    params.insert("park".into(), json!(park));
                    params.insert("sampler".into(), json!(k.agent));
                    params.insert("sample_goal".into(), json!(goal.goal_id));
                    let rendezvous = GoalMsg {
                        goal_id: format!("{}/container", goal.goal_id),
                        issuer: k.agent.clone(),
                        target: container.clone(),
                        level: AutonomyLevel::E4,
                        kind: GoalKind::CollectSample,
                        params,
                        priority: goal.priority,
                    };
                    vec![
                        Step::new(StepKind::SendGoal { goal: rendezvous }),
                        Step::new(StepKind::Rendezvous {
                            peer: container.clone(),
                            point: park,
                            radius: 2.0 * t.precise_tolerance + 0.1,
                        }),
                        Step::new(StepKind::ToolChange { tool: Tool::Shovel }),
                        Step::new(StepKind::MoveToSite { point }),
                        Step::new(StepKind::Scoop),
                        Step::new(StepKind::Transfer { container }),
                        Step::new(StepKind::ResumeHook).always(),
                    ]
                }
                other => return Err(unplannable(format!("unknown sampling role `{other}`"))),
            }
        }
        GoalKind::RepairPanel => {
            let tag = goal.param_u32("tag_id").ok_or_else(|| unplannable("RepairPanel needs tag_id"))?;
            let (rack, i) = rack_and_index(k, tag).ok_or_else(|| unplannable(format!("unknown panel tag {tag}")))?;
            let astronaut = k.astronaut.clone().ok_or_else(|| unplannable("no astronaut in mission"))?;
            let (worksite, supervise, heading) = repair_geometry(rack, i, t);
            let mut params = goal.params.clone();
            params.insert("worksite".into(), json!(worksite));
            let assist = GoalMsg {
                goal_id: format!("{}/assist", goal.goal_id),
                issuer: k.agent.clone(),
                target: astronaut.clone(),
                level: AutonomyLevel::E4,
                kind: GoalKind::AssistRepair,
                params,
                priority: goal.priority,
            };
            let assist_id = assist.goal_id.clone();
            vec![
                Step::new(StepKind::SendGoal { goal: assist }),
                Step::new(StepKind::NavigateTo {
                    point: supervise,
                    tolerance: 2.0 * t.precise_tolerance,
                    heading: Some(heading),
                }),
                Step::new(StepKind::Supervise {
                    astronaut: astronaut.clone(),
                    tag_id: tag,
                }),
                Step::new(StepKind::AwaitRepair {
                    astronaut,
                    goal_id: assist_id,
                }),
            ]
        }
        GoalKind::ReturnToBase => vec![Step::new(nav(k.base, t.waypoint_tolerance))],
        GoalKind::NavigateTo => {
            let p = goal.param_point("point").ok_or_else(|| unplannable("NavigateTo needs point"))?;
            if !inside(&k.map_extent, p) {
                return Err(unplannable("point outside map"));
            }
            vec![Step::new(nav(p, t.waypoint_tolerance))]
        }
        GoalKind::AssistRepair | GoalKind::Unknown => {
            return Err(unplannable(format!("{:?} is not executed by rovers", goal.kind)))
        }
    };
    Ok(Plan::new(goal, steps))
}
