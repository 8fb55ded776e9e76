//! Deterministic multi-agent rover autonomy simulator and algorithm library.
//!
//! The crate is organised by subsystem:
//!
//! * [`world`] holds the simulated scene and synthesises sensor frames.
//! * [`perception`] turns detections into located, tracked objects and
//!   classifies interactions and emergencies.
//! * [`navmap`] builds occupancy grids from segmentation-masked depth, fuses
//!   maps between agents and packs segmentation masks for transmission.
//! * [`planner`] is a Fast Marching Square global planner plus a pure-pursuit
//!   follower.
//! * [`tasks`] contains the panel inspection procedure and the tool-changer
//!   and sampling state machines.
//! * [`executive`] is the goal/observation agent controller with its
//!   message bus and emergency escalation.
//! * [`harness`] runs scenarios end to end and produces traces and reports.

pub mod camera;
pub mod executive;
pub mod geometry;
pub mod harness;
pub mod navmap;
pub mod perception;
pub mod planner;
pub mod pnm;
pub mod raster;
pub mod tasks;
pub mod world;

pub use camera::{CameraModel, Intrinsics};
pub use geometry::{Pose2, Se2};
pub use raster::Raster;
