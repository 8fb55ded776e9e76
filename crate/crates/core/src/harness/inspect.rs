use crate::geometry::Pose2;
use crate::tasks::{inspect_rack, InspectionConfig, InspectionReport, RoverInterface};
use crate::world::{render_frame, SensorFrame, World};

use super::{HarnessError, Scenario};

/// Rover that is placed at each standoff pose directly; every capture
/// advances the world one tick so frame noise stays tick-keyed.
pub struct TeleportRover<'a> {
    pub world: &'a mut World,
    pub agent: String,
    pub dt: f64,
}

impl RoverInterface for TeleportRover<'_> {
    fn move_to(&mut self, pose: Pose2) -> Result<(), String> {
        let e = self
            .world
            .entity_mut(&self.agent)
            .ok_or_else(|| format!("no entity `{}`", self.agent))?;
        e.pose = pose;
        e.velocity = Default::default();
        Ok(())
    }

    fn capture(&mut self) -> SensorFrame {
        self.world.step_physics(self.dt);
        render_frame(self.world, &self.agent, self.world.tick).expect("agent exists after move_to")
    }
}

/// Runs the inspection procedure for one rack of a scenario with the first
/// rover, outside the mission loop.
pub fn inspect_scenario(scenario: &Scenario, rack_id: &str, cfg: &InspectionConfig) -> Result<InspectionReport, HarnessError> {
    scenario.validate()?;
    let rack = scenario
        .racks
        .iter()
        .find(|r| r.rack_id == rack_id)
        .ok_or_else(|| HarnessError::World(format!("no rack `{rack_id}`")))?;
    let agent = scenario
        .rover_ids()
        .into_iter()
        .next()
        .ok_or_else(|| HarnessError::World("scenario has no rover".into()))?;
    let mut world = scenario.build_world().map_err(HarnessError::World)?;
    let mut rover = TeleportRover {
        world: &mut world,
        agent,
        dt: scenario.dt,
    };
    let records = inspect_rack(rack, &mut rover, cfg).map_err(|e| HarnessError::World(e.to_string()))?;
    Ok(InspectionReport {
        rack_id: rack.rack_id.clone(),
        records,
    })
}
