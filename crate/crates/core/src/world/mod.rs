//! Simulated planetary scene and synthetic sensor frames.
//!
//! The world is a single-writer value: the simulation loop advances it with
//! [`World::step_physics`], while [`render_frame`] and
//! [`ground_truth_visible`] only read it.

mod entity;
mod export;
mod noise;
mod render;
mod terrain;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use entity::{
    BBox, DetectionClass, Entity, EntityKind, EntityState, Extent, OrientedBox, PanelDamage, RawDetection, Velocity,
};
pub use export::{entities_json, seg_ground_truth, terrain_to_pgm16, ELEVATION_OFFSET, ELEVATION_SCALE};
pub use noise::NoiseModel;
pub use render::{ground_truth_visible, render_frame, SensorFrame, VisibleEntity};
pub use terrain::{ProceduralTerrain, RockClass, Terrain};

use crate::camera::{CameraModel, Intrinsics};
use crate::geometry::wrap_angle;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum WorldError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("entity `{0}` carries no camera")]
    NoCamera(String),
    #[error("invalid world: {0}")]
    Invalid(String),
}

/// Camera and range model shared by every agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view in degrees.
    pub hfov_deg: f64,
    pub max_range: f64,
    pub rover_camera_height: f64,
    pub astronaut_camera_height: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            width: 80,
            height: 60,
            hfov_deg: 90.0,
            max_range: 15.0,
            rover_camera_height: 0.5,
            astronaut_camera_height: 1.7,
        }
    }
}

impl SensorConfig {
    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics::from_fov(self.width, self.height, self.hfov_deg.to_radians())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledFall {
    pub entity: String,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledDamage {
    pub tag_id: u32,
    pub tick: u64,
    pub damage: PanelDamage,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    pub falls: Vec<ScheduledFall>,
    pub damage: Vec<ScheduledDamage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub terrain: Terrain,
    pub entities: Vec<Entity>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub sensor: SensorConfig,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub tick: u64,
}

impl World {
    pub fn new(terrain: Terrain) -> Self {
        World {
            terrain,
            entities: Vec::new(),
            noise: NoiseModel::default(),
            sensor: SensorConfig::default(),
            schedule: Schedule::default(),
            tick: 0,
        }
    }

    pub fn with_entity(mut self, e: Entity) -> Self {
        self.entities.push(e);
        self
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn entity_mut(&mut self, id: &str) -> Option<&mut Entity> {
        self.entities.iter_mut().find(|e| e.id == id)
    }

    pub fn panel_by_tag(&self, tag: u32) -> Option<&Entity> {
        self.entities.iter().find(|e| e.tag_id() == Some(tag))
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        self.terrain.validate().map_err(WorldError::Invalid)?;
        self.noise.validate().map_err(WorldError::Invalid)?;
        let mut ids = BTreeSet::new();
        let mut tags = BTreeSet::new();
        for e in &self.entities {
            if !ids.insert(e.id.as_str()) {
                return Err(WorldError::Invalid(format!("duplicate entity id `{}`", e.id)));
            }
            if !self.terrain.contains(e.pose.x, e.pose.y) {
                return Err(WorldError::Invalid(format!("entity `{}` lies outside the terrain", e.id)));
            }
            if let Some(tag) = e.tag_id() {
                if !tags.insert(tag) {
                    return Err(WorldError::Invalid(format!("duplicate panel tag {tag}")));
                }
            }
            if !e.kind.expected_state_matches(&e.state) {
                return Err(WorldError::Invalid(format!("entity `{}` state does not match its kind", e.id)));
            }
        }
        Ok(())
    }

    /// Camera of a rover or astronaut at its current pose.
    pub fn camera_for(&self, agent_id: &str) -> Result<CameraModel, WorldError> {
        let e = self
            .entity(agent_id)
            .ok_or_else(|| WorldError::UnknownAgent(agent_id.to_string()))?;
        let mount = match e.kind {
            EntityKind::RoverLamarr | EntityKind::RoverMae => self.sensor.rover_camera_height,
            EntityKind::Astronaut => self.sensor.astronaut_camera_height,
            _ => return Err(WorldError::NoCamera(agent_id.to_string())),
        };
        let ground = self.terrain.elevation_at(e.pose.x, e.pose.y);
        Ok(CameraModel {
            intrinsics: self.sensor.intrinsics(),
            position: [e.pose.x, e.pose.y, ground + mount],
            heading: e.pose.heading,
        })
    }

    pub fn set_velocity(&mut self, id: &str, v: f64, omega: f64) -> Result<(), WorldError> {
        let e = self
            .entity_mut(id)
            .ok_or_else(|| WorldError::UnknownAgent(id.to_string()))?;
        e.velocity = Velocity { v, omega };
        Ok(())
    }

    /// Advances one tick: unicycle integration of commanded velocities
    /// (clamped to the terrain), then scheduled falls and panel damage due at
    /// or before the new tick.
    pub fn step_physics(&mut self, dt: f64) {
        assert!(dt > 0.0, "dt must be positive");
        self.tick += 1;
        let terrain = &self.terrain;
        for e in &mut self.entities {
            if !e.is_mobile() {
                continue;
            }
            let Velocity { v, omega } = e.velocity;
            if v == 0.0 && omega == 0.0 {
                continue;
            }
            let x = e.pose.x + v * e.pose.heading.cos() * dt;
            let y = e.pose.y + v * e.pose.heading.sin() * dt;
            let (x, y) = terrain.clamp_point(x, y);
            e.pose.x = x;
            e.pose.y = y;
            e.pose.heading = wrap_angle(e.pose.heading + omega * dt);
        }
        let tick = self.tick;
        for f in &self.schedule.falls {
            if f.tick <= tick {
                if let Some(e) = self.entities.iter_mut().find(|e| e.id == f.entity) {
                    if let EntityState::Astronaut { upright } = &mut e.state {
                        *upright = false;
                        e.velocity = Velocity::default();
                    }
                }
            }
        }
        for d in &self.schedule.damage {
            if d.tick <= tick {
                if let Some(e) = self.entities.iter_mut().find(|e| e.tag_id() == Some(d.tag_id)) {
                    if let EntityState::Panel { damage, .. } = &mut e.state {
                        *damage = d.damage;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;

    fn world() -> World {
        World::new(Terrain::flat(100, 100, 0.1))
            .with_entity(Entity::rover("lamarr", EntityKind::RoverLamarr, Pose2::new(2.0, 2.0, 0.0)))
            .with_entity(Entity::astronaut("astro", Pose2::new(5.0, 5.0, 0.0)))
    }

    #[test]
    fn unicycle_advances_along_heading() {
        let mut w = world();
        w.set_velocity("lamarr", 0.5, 0.0).unwrap();
        w.step_physics(1.0);
        let p = w.entity("lamarr").unwrap().pose;
        assert!((p.x - 2.5).abs() < 1e-12 && (p.y - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_velocity_is_identity() {
        let mut w = world();
        let before = w.entity("lamarr").unwrap().pose;
        w.step_physics(0.1);
        assert_eq!(w.entity("lamarr").unwrap().pose, before);
    }

    #[test]
    fn poses_clamp_at_terrain_bounds() {
        let mut w = world();
        w.set_velocity("lamarr", -10.0, 0.0).unwrap();
        w.step_physics(1.0);
        let p = w.entity("lamarr").unwrap().pose;
        assert!(p.x >= 0.0 && w.terrain.contains(p.x, p.y));
    }

    #[test]
    fn scheduled_fall_applies_from_its_tick() {
        let mut w = world();
        w.schedule.falls.push(ScheduledFall {
            entity: "astro".into(),
            tick: 100,
        });
        for t in 1..=120 {
            w.step_physics(0.1);
            let upright = matches!(w.entity("astro").unwrap().state, EntityState::Astronaut { upright: true });
            assert_eq!(upright, t < 100, "tick {t}");
        }
    }

    #[test]
    fn validation_rejects_duplicates() {
        let w = world().with_entity(Entity::astronaut("astro", Pose2::new(1.0, 1.0, 0.0)));
        assert!(w.validate().is_err());
        let w = world()
            .with_entity(Entity::panel("p1", Pose2::new(3.0, 3.0, 0.0), 7))
            .with_entity(Entity::panel("p2", Pose2::new(4.0, 3.0, 0.0), 7));
        assert!(w.validate().is_err());
        assert!(world().validate().is_ok());
    }

    #[test]
    fn camera_requires_agent() {
        let w = world();
        assert_eq!(w.camera_for("nobody"), Err(WorldError::UnknownAgent("nobody".into())));
        assert!(w.camera_for("lamarr").is_ok());
    }
}
