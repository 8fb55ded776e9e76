use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::executive::{AutonomyLevel, BusConfig, DecomposeConfig, Dropout, ExecConfig, GoalMsg};
use crate::geometry::Pose2;
use crate::tasks::RackSpec;
use crate::world::{
    Entity, EntityKind, NoiseModel, ProceduralTerrain, RockClass, Schedule, SensorConfig, Terrain, World,
    ELEVATION_OFFSET, ELEVATION_SCALE,
};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("ScenarioInvalid at `{path}`: {reason}")]
pub struct ScenarioInvalid {
    pub path: String,
    pub reason: String,
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> ScenarioInvalid {
    ScenarioInvalid {
        path: path.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerrainSource {
    Flat {
        width: usize,
        height: usize,
        resolution: f64,
    },
    Procedural(ProceduralTerrain),
    /// 16-bit elevation PGM, path relative to the scenario file.
    Pgm { path: PathBuf, resolution: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntitySpec {
    Lamarr {
        id: String,
        pose: Pose2,
    },
    Mae {
        id: String,
        pose: Pose2,
    },
    Astronaut {
        id: String,
        pose: Pose2,
    },
    Rock {
        id: String,
        pose: Pose2,
        size: f64,
        #[serde(default = "default_rock_class")]
        class: RockClass,
    },
    Panel {
        id: String,
        pose: Pose2,
        tag_id: u32,
    },
}

fn default_rock_class() -> RockClass {
    RockClass::Close
}

impl EntitySpec {
    pub fn id(&self) -> &str {
        match self {
            EntitySpec::Lamarr { id, .. }
            | EntitySpec::Mae { id, .. }
            | EntitySpec::Astronaut { id, .. }
            | EntitySpec::Rock { id, .. }
            | EntitySpec::Panel { id, .. } => id,
        }
    }

    pub fn build(&self) -> Entity {
        match self {
            EntitySpec::Lamarr { id, pose } => Entity::rover(id, EntityKind::RoverLamarr, *pose),
            EntitySpec::Mae { id, pose } => Entity::rover(id, EntityKind::RoverMae, *pose),
            EntitySpec::Astronaut { id, pose } => Entity::astronaut(id, *pose),
            EntitySpec::Rock { id, pose, size, class } => Entity::rock(id, *pose, *size, *class),
            EntitySpec::Panel { id, pose, tag_id } => Entity::panel(id, *pose, *tag_id),
        }
    }

    pub fn is_rover(&self) -> bool {
        matches!(self, EntitySpec::Lamarr { .. } | EntitySpec::Mae { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledGoal {
    pub tick: u64,
    pub goal: GoalMsg,
}

/// Interesting zone reported by a rover's science camera at `tick`,
/// `ahead` meters in front of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledZone {
    pub tick: u64,
    pub agent: String,
    #[serde(default = "default_ahead")]
    pub ahead: f64,
}

fn default_ahead() -> f64 {
    1.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplyPolicy {
    Silent,
    Ok,
    Help,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AstronautScript {
    pub reply: ReplyPolicy,
    pub reply_delay_ticks: u64,
    pub speed: f64,
    pub work_ticks: u64,
    /// Falls this many ticks into the repair work.
    pub fall_after_work_ticks: Option<u64>,
    /// Panel tag worked on by mistake before the assigned one.
    pub wrong_panel_first: Option<u32>,
    pub wrong_dwell_ticks: u64,
}

impl Default for AstronautScript {
    fn default() -> Self {
        AstronautScript {
            reply: ReplyPolicy::Silent,
            reply_delay_ticks: 100,
            speed: 0.4,
            work_ticks: 600,
            fall_after_work_ticks: None,
            wrong_panel_first: None,
            wrong_dwell_ticks: 300,
        }
    }
}

/// Per-agent overrides of the shared executive configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentOverrides {
    pub lock_failures: Option<u32>,
    pub level: Option<AutonomyLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    pub seed: u64,
    /// Mission duration in ticks.
    pub ticks: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub terrain: TerrainSource,
    pub entities: Vec<EntitySpec>,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub dropouts: Vec<Dropout>,
    #[serde(default)]
    pub racks: Vec<RackSpec>,
    #[serde(default)]
    pub goals: Vec<ScheduledGoal>,
    #[serde(default)]
    pub zones: Vec<ScheduledZone>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub sensor: SensorConfig,
    #[serde(default)]
    pub bus: BusConfig,
    #[serde(default)]
    pub exec: ExecConfig,
    #[serde(default)]
    pub decompose: DecomposeConfig,
    #[serde(default)]
    pub overrides: std::collections::BTreeMap<String, AgentOverrides>,
    #[serde(default)]
    pub astronaut: AstronautScript,
    /// Map integration period in ticks.
    #[serde(default = "default_integrate_every")]
    pub integrate_every: u64,
    /// Ends the run once every goal is terminal and no agent has work left.
    #[serde(default)]
    pub stop_when_idle: bool,
    /// Operator reset of escalations at this tick.
    #[serde(default)]
    pub operator_reset_tick: Option<u64>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_dt() -> f64 {
    0.1
}

fn default_integrate_every() -> u64 {
    5
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioInvalid> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioInvalid> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid("$", format!("{}: {e}", path.display())))?;
        let mut s = Scenario::from_json(&text)?;
        s.base_dir = path.parent().map(Path::to_path_buf);
        s.validate()?;
        Ok(s)
    }

    pub fn rover_ids(&self) -> Vec<String> {
        self.entities.iter().filter(|e| e.is_rover()).map(|e| e.id().to_string()).collect()
    }

    pub fn astronaut_id(&self) -> Option<String> {
        self.entities.iter().find_map(|e| match e {
            EntitySpec::Astronaut { id, .. } => Some(id.clone()),
            _ => None,
        })
    }

    pub fn validate(&self) -> Result<(), ScenarioInvalid> {
        if self.version != SCENARIO_VERSION {
            return Err(invalid("version", format!("expected {SCENARIO_VERSION}, got {}", self.version)));
        }
        if self.ticks == 0 {
            return Err(invalid("ticks", "must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if self.integrate_every == 0 {
            return Err(invalid("integrate_every", "must be positive"));
        }
        match &self.terrain {
            TerrainSource::Flat {
                width,
                height,
                resolution,
            } => {
                if *width == 0 || *height == 0 || !(*resolution > 0.0) {
                    return Err(invalid("terrain", "flat terrain needs positive dimensions"));
                }
            }
            TerrainSource::Procedural(p) => {
                if p.width == 0 || p.height == 0 || !(p.resolution > 0.0) || !(p.feature_size > 0.0) {
                    return Err(invalid("terrain", "procedural terrain needs positive dimensions"));
                }
            }
            TerrainSource::Pgm { path, resolution } => {
                let full = self.resolve(path);
                if !full.exists() {
                    return Err(invalid("terrain.path", format!("{} does not exist", full.display())));
                }
                if !(*resolution > 0.0) {
                    return Err(invalid("terrain.resolution", "must be positive"));
                }
            }
        }
        let mut ids = BTreeSet::new();
        for (k, e) in self.entities.iter().enumerate() {
            if !ids.insert(e.id()) {
                return Err(invalid(format!("entities[{k}].id"), format!("duplicate id `{}`", e.id())));
            }
        }
        if self.rover_ids().is_empty() {
            return Err(invalid("entities", "at least one rover is required"));
        }
        for (k, f) in self.schedule.falls.iter().enumerate() {
            if f.tick > self.ticks {
                return Err(invalid(format!("schedule.falls[{k}].tick"), "beyond mission duration"));
            }
            if Some(&f.entity) != self.astronaut_id().as_ref() {
                return Err(invalid(format!("schedule.falls[{k}].entity"), "not an astronaut"));
            }
        }
        for (k, d) in self.schedule.damage.iter().enumerate() {
            if d.tick > self.ticks {
                return Err(invalid(format!("schedule.damage[{k}].tick"), "beyond mission duration"));
            }
        }
        for (k, d) in self.dropouts.iter().enumerate() {
            if d.from_tick > d.to_tick || d.to_tick > self.ticks {
                return Err(invalid(format!("dropouts[{k}]"), "interval must lie within the mission"));
            }
        }
        for (k, g) in self.goals.iter().enumerate() {
            if g.tick > self.ticks {
                return Err(invalid(format!("goals[{k}].tick"), "beyond mission duration"));
            }
            if !ids.contains(g.goal.target.as_str()) {
                return Err(invalid(format!("goals[{k}].goal.target"), format!("unknown agent `{}`", g.goal.target)));
            }
        }
        let mut goal_ids = BTreeSet::new();
        for (k, g) in self.goals.iter().enumerate() {
            if !goal_ids.insert(g.goal.goal_id.as_str()) {
                return Err(invalid(format!("goals[{k}].goal.goal_id"), "duplicate goal id"));
            }
        }
        for (k, z) in self.zones.iter().enumerate() {
            if z.tick > self.ticks {
                return Err(invalid(format!("zones[{k}].tick"), "beyond mission duration"));
            }
            if !self.rover_ids().contains(&z.agent) {
                return Err(invalid(format!("zones[{k}].agent"), format!("unknown rover `{}`", z.agent)));
            }
        }
        for (k, r) in self.racks.iter().enumerate() {
            r.validate().map_err(|e| invalid(format!("racks[{k}]"), e.to_string()))?;
        }
        for name in self.overrides.keys() {
            if !self.rover_ids().contains(name) {
                return Err(invalid(format!("overrides.{name}"), "unknown rover"));
            }
        }
        self.noise.validate().map_err(|e| invalid("noise", e))?;
        self.exec.emergency.validate().map_err(|e| invalid("exec.emergency", e))?;
        self.exec.planner.validate().map_err(|e| invalid("exec.planner", e.to_string()))?;
        if !(0.0..=1.0).contains(&self.bus.drop_probability) {
            return Err(invalid("bus.drop_probability", "must lie in [0, 1]"));
        }
        let world = self.build_world().map_err(|e| invalid("entities", e))?;
        world.validate().map_err(|e| invalid("entities", e.to_string()))?;
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn build_terrain(&self) -> Result<Terrain, String> {
        Ok(match &self.terrain {
            TerrainSource::Flat {
                width,
                height,
                resolution,
            } => Terrain::flat(*width, *height, *resolution),
            TerrainSource::Procedural(p) => Terrain::procedural(p, self.seed),
            TerrainSource::Pgm { path, resolution } => {
                let bytes = std::fs::read(self.resolve(path)).map_err(|e| e.to_string())?;
                let img = crate::pnm::decode_pgm16(&bytes).map_err(|e| e.to_string())?;
                let mut t = Terrain::flat(img.width, img.height, *resolution);
                for j in 0..t.height {
                    for i in 0..t.width {
                        let v = *img.get(i, t.height - 1 - j) as i64;
                        t.elevation[j * t.width + i] = (v - ELEVATION_OFFSET) as f64 * ELEVATION_SCALE;
                    }
                }
                t
            }
        })
    }

    pub fn build_world(&self) -> Result<World, String> {
        let mut w = World::new(self.build_terrain()?);
        w.entities = self.entities.iter().map(EntitySpec::build).collect();
        w.noise = self.noise.clone();
        w.sensor = self.sensor.clone();
        w.schedule = self.schedule.clone();
        Ok(w)
    }
}
